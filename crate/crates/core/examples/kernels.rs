//! Standardized error laws and censored log-likelihoods.
//!
//! cargo run --example kernels

use survstrat::kernels::{log_density, log_survival, sample};
use survstrat::rng::derive_rng;
use survstrat::{ClusterParams, KernelFamily};

fn main() -> survstrat::Result<()> {
    let params = ClusterParams::new(2.0, vec![-1.5], 0.15)?;
    let x = [0.4];
    let mut rng = derive_rng(7, 0);
    println!("{:>15} {:>10} {:>10} {:>10} {:>10}", "family", "log f(2)", "log S(2)", "mean z", "var z");
    for family in KernelFamily::ALL {
        let z: Vec<f64> = (0..200_000).map(|_| family.std_sample(&mut rng)).collect();
        let m = z.iter().sum::<f64>() / z.len() as f64;
        let v = z.iter().map(|a| (a - m).powi(2)).sum::<f64>() / z.len() as f64;
        println!(
            "{:>15} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            family.name(),
            log_density(family, 2.0, &x, &params)?,
            log_survival(family, 2.0, &x, &params)?,
            m,
            v
        );
    }

    let loc = params.location(&x);
    let y = sample(KernelFamily::TypeIMinimum, &params, &x, &mut rng)?;
    println!("draw y = {y:.4} around location {loc:.4}");
    for exact in [true, false] {
        let ll = KernelFamily::TypeIMinimum.censored_log_lik(y, exact, loc, params.zeta);
        println!("  contribution as {}: {ll:.4}", if exact { "event" } else { "censored" });
    }
    Ok(())
}
