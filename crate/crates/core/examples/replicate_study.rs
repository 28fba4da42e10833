//! Replicated RAND-index study on simulated strata.
//!
//! cargo run --release --example replicate_study -- D0 M0 90 0.0 10

use std::time::Instant;

use survstrat::simulation::{mean_rand, replicate_study, Dgp, StudyConfig};
use survstrat::{ModelVariant, SamplerConfig};

fn main() -> survstrat::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let study = StudyConfig {
        dgps: vec![Dgp::parse(&arg(0, "D0"))?],
        variants: vec![ModelVariant::parse(&arg(1, "M0"))?],
        sizes: vec![arg(2, "90").parse().expect("size")],
        censor_levels: vec![arg(3, "0.0").parse().expect("censor level")],
        replicates: arg(4, "4").parse().expect("replicates"),
        sampler: SamplerConfig { iters: 5000, burnin: 3000, record_loglik: false, ..SamplerConfig::default() },
        ..StudyConfig::default()
    };
    let start = Instant::now();
    let rows = replicate_study(&study)?;
    for r in &rows {
        println!(
            "{} {} n={} censor={} rep={} rand={:?} k={:?} {:.1}s {}",
            r.dgp, r.variant, r.n, r.censor_level, r.replicate, r.rand_index, r.k_hat, r.runtime_s, r.error
        );
    }
    println!("mean RAND {:?} in {:.1}s", mean_rand(&rows), start.elapsed().as_secs_f64());
    Ok(())
}
