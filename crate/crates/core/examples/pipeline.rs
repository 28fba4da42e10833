//! The file-based pipeline behind the command-line tool, driven from code:
//! simulate, fit, stratify, refit, curves, compare, diagnostics and report.
//!
//! cargo run --release --example pipeline -- /tmp/survstrat-demo

use std::path::PathBuf;

use survstrat::cli::commands;
use survstrat::cli::{CurveRequest, RunConfig};
use survstrat::simulation::Dgp;
use survstrat::KernelFamily;

fn main() -> survstrat::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "survstrat-demo".into()));
    let data = root.join("data.csv");
    commands::simulate(Dgp::D2, 150, 0.3, KernelFamily::TypeIMinimum, 1, &data, Some(&root.join("truth.csv")))?;

    let mut cfg = RunConfig { data: Some(data), out: root.join("run"), ..RunConfig::default() };
    cfg.sampler.iters = 4000;
    cfg.sampler.burnin = 2000;
    commands::fit(&cfg)?;
    commands::stratify(&cfg)?;
    commands::refit(&cfg)?;
    commands::compare(&cfg, &KernelFamily::ALL, false)?;
    commands::diag(&cfg, 50)?;
    let gaps = commands::report(&cfg, &CurveRequest { points: 50, ..Default::default() })?;
    println!("report in {} ({} gaps)", cfg.out.join("report").display(), gaps.len());
    Ok(())
}
