//! Mixing diagnostics: acceptance rates, autocorrelation and Geweke scores.
//!
//! cargo run --release --example diagnostics

use survstrat::inference::diagnostics;
use survstrat::rng::{derive_rng, task_stream};
use survstrat::sampler::run;
use survstrat::simulation::{simulate, Dgp};
use survstrat::{KernelFamily, MixingMeasure, ModelVariant, SamplerConfig};

fn main() -> survstrat::Result<()> {
    let spec = Dgp::D0.spec(90, KernelFamily::TypeIMinimum, 0.0);
    let (data, _, _) = simulate(&spec, &mut derive_rng(8, task_stream("example/data")))?;
    let config = SamplerConfig { iters: 6000, burnin: 3000, seed: 8, ..SamplerConfig::default() };
    let chain = run(&data, ModelVariant::M0, KernelFamily::TypeIMinimum, MixingMeasure::Nig { alpha: 1.0, tau: 1.0 }, &config)?;

    for (name, rate) in &chain.accept_rates {
        println!("acceptance {name:>16}: {rate:.3}");
    }
    println!("adapted steps {:?}", chain.steps);

    let series: [(&str, Vec<f64>); 3] = [
        ("k", chain.k_series()),
        ("u", chain.draws.iter().map(|d| d.u.unwrap_or(f64::NAN)).collect()),
        ("mu of obs 1", chain.draws.iter().map(|d| d.clusters[d.alloc[0]].mu).collect()),
    ];
    for (name, s) in series {
        let d = diagnostics(&s, 20)?;
        println!(
            "{name:>12}: Geweke z {:>7}  acf(1) {:.3}  acf(10) {:.3}  acf(20) {:.3}",
            d.geweke_z.map_or("-".into(), |z| format!("{z:.2}")),
            d.acf[1],
            d.acf[10],
            d.acf[20]
        );
    }
    Ok(())
}
