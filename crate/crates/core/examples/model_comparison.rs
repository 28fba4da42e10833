//! LPML and WAIC across kernel families, and N-IG against the Dirichlet
//! process with the same prior expected number of clusters.
//!
//! cargo run --release --example model_comparison

use rayon::prelude::*;
use survstrat::inference::{fit_scores, waic, VarianceConvention};
use survstrat::mixing::{dp_mass_matching, prior_expected_clusters};
use survstrat::rng::{derive_rng, task_stream};
use survstrat::sampler::run;
use survstrat::simulation::{simulate, Dgp};
use survstrat::{KernelFamily, MixingMeasure, ModelVariant, SamplerConfig};

fn main() -> survstrat::Result<()> {
    let spec = Dgp::D1.spec(120, KernelFamily::Logistic, 0.2);
    let (data, _, _) = simulate(&spec, &mut derive_rng(3, task_stream("example/data")))?;
    let nig = MixingMeasure::Nig { alpha: 1.0, tau: 1.0 };
    let est = prior_expected_clusters(&nig, data.n(), 20_000, &mut derive_rng(3, task_stream("example/match")))?;
    let dp = MixingMeasure::Dp { mass: dp_mass_matching(est.mean, data.n())? };

    let cells: Vec<(MixingMeasure, KernelFamily)> =
        [nig, dp].iter().flat_map(|m| KernelFamily::ALL.map(|k| (*m, k))).collect();
    let results = cells
        .par_iter()
        .map(|&(measure, kernel)| {
            let config = SamplerConfig {
                iters: 4000,
                burnin: 2000,
                seed: 3,
                stream: task_stream(&format!("{}/{}", measure.name(), kernel.name())),
                ..SamplerConfig::default()
            };
            let chain = run(&data, ModelVariant::M2, kernel, measure, &config)?;
            let s = fit_scores(&chain)?;
            Ok((measure, kernel, s, waic(&chain, VarianceConvention::Sample)?))
        })
        .collect::<survstrat::Result<Vec<_>>>()?;
    println!("{:>4} {:>15} {:>10} {:>10} {:>12}", "", "kernel", "LPML", "WAIC", "WAIC(n-1)");
    for (m, k, s, w) in results {
        println!("{:>4} {:>15} {:>10.2} {:>10.2} {:>12.2}", m.name(), k.name(), s.lpml, s.waic, w);
    }
    Ok(())
}
