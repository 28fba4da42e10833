//! Per-stratum refits, coefficient summaries and survival curves.
//!
//! cargo run --release --example stratum_inference

use survstrat::inference::{kaplan_meier, predictive_survival, stratum_refit, weibull_mle, CurveOptions};
use survstrat::partitions::optimal_partition;
use survstrat::rng::{derive_rng, task_stream};
use survstrat::sampler::run;
use survstrat::simulation::{simulate, Dgp};
use survstrat::{KernelFamily, MixingMeasure, ModelVariant, SamplerConfig};

fn main() -> survstrat::Result<()> {
    let spec = Dgp::D2.spec(150, KernelFamily::TypeIMinimum, 0.0);
    let (data, _, _) = simulate(&spec, &mut derive_rng(5, task_stream("example/data")))?;
    let measure = MixingMeasure::Nig { alpha: 1.0, tau: 1.0 };
    let config = SamplerConfig { iters: 5000, burnin: 3000, seed: 5, ..SamplerConfig::default() };
    let chain = run(&data, ModelVariant::M2, KernelFamily::TypeIMinimum, measure, &config)?;
    let partition = optimal_partition(&chain.partitions())?.partition;

    let refit = stratum_refit(&data, &partition, ModelVariant::M2, KernelFamily::TypeIMinimum, measure, &config, 0.05)?;
    println!("skipped singleton strata: {:?}", refit.skipped);
    let grid: Vec<f64> = (1..=8).map(|k| 5.0 * k as f64).collect();
    for s in &refit.strata {
        println!("stratum {}", s.label);
        for p in &s.summaries {
            println!(
                "  {:>8} median {:>8.3}  95% [{:>8.3}, {:>8.3}]{}",
                p.parameter,
                p.median,
                p.lo,
                p.hi,
                if p.excludes_zero { "  *" } else { "" }
            );
        }
        let rows = &partition.blocks()[s.label - 1];
        let sub = data.subset(rows);
        let times: Vec<f64> = sub.y().iter().map(|y| y.exp()).collect();
        let km = kaplan_meier(&times, sub.delta())?;
        let mut rng = derive_rng(5, task_stream(&format!("example/curve/{}", s.label)));
        let curve = predictive_survival(&s.chain, &grid, &[0.0], &CurveOptions::default(), &mut rng)?;
        let mle = weibull_mle(&sub).ok();
        for (k, t) in grid.iter().enumerate() {
            let weibull = mle.as_ref().map(|f| {
                KernelFamily::TypeIMinimum.std_log_survival((t.ln() - f.params.mu) / f.params.zeta).exp()
            });
            println!(
                "  t={t:>5.1}  predictive {:.3} [{:.3}, {:.3}]  KM {:.3}  Weibull {:?}",
                curve.mean[k],
                curve.lo[k],
                curve.hi[k],
                km.eval(*t),
                weibull.map(|w| (w * 1000.0).round() / 1000.0)
            );
        }
    }
    Ok(())
}
