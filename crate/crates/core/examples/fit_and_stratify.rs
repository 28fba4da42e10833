//! Fit the mixture to simulated strata and recover them with the
//! VI-optimal partition.
//!
//! cargo run --release --example fit_and_stratify -- D2 150 0.3

use survstrat::partitions::{optimal_partition, rand_index, vi_distance};
use survstrat::rng::{derive_rng, task_stream};
use survstrat::sampler::run;
use survstrat::simulation::{simulate, Dgp};
use survstrat::{KernelFamily, MixingMeasure, ModelVariant, SamplerConfig};

fn main() -> survstrat::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dgp = Dgp::parse(args.first().map(String::as_str).unwrap_or("D2"))?;
    let n: usize = args.get(1).map_or(150, |s| s.parse().expect("n"));
    let censor: f64 = args.get(2).map_or(0.0, |s| s.parse().expect("censoring fraction"));

    let spec = dgp.spec(n, KernelFamily::TypeIMinimum, censor);
    let mut rng = derive_rng(2024, task_stream("example/data"));
    let (data, truth, info) = simulate(&spec, &mut rng)?;
    println!("{dgp}: n = {n}, censored fraction {:.3}", info.realized_fraction);

    let config = SamplerConfig { iters: 5000, burnin: 3000, seed: 2024, ..SamplerConfig::default() };
    let measure = MixingMeasure::Nig { alpha: 1.0, tau: 1.0 };
    let chain = run(&data, ModelVariant::M2, KernelFamily::TypeIMinimum, measure, &config)?;
    let ks = chain.k_series();
    println!("posterior mean k {:.2}; acceptance {:?}", ks.iter().sum::<f64>() / ks.len() as f64, chain.accept_rates);

    let best = optimal_partition(&chain.partitions())?;
    println!(
        "optimal partition: k = {}, sizes {:?}, expected VI loss {:.4}",
        best.partition.k(),
        best.partition.sizes(),
        best.expected_loss
    );
    println!(
        "against the generating strata: RAND {:.4}, VI {:.4}",
        rand_index(&best.partition, &truth)?,
        vi_distance(&best.partition, &truth)?
    );
    Ok(())
}
