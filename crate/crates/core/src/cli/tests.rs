use std::fs;
use std::path::Path;

use clap::Parser;

use super::commands::*;
use super::*;
use crate::sampler::io::read_chain;

fn toy(dir: &Path) -> RunConfig {
    let data = dir.join("toy.csv");
    fs::write(&data, "time,status,x1\n1.2,1,0.5\n3.4,0,-0.2\n2.0,1,1.1\n").unwrap();
    let mut cfg = RunConfig { data: Some(data), out: dir.join("out"), ..RunConfig::default() };
    cfg.sampler.iters = 10;
    cfg.sampler.burnin = 5;
    cfg.sampler.seed = 3;
    cfg
}

fn sim(dir: &Path, n: usize) -> RunConfig {
    let data = dir.join("sim.csv");
    simulate(Dgp::D2, n, 0.2, KernelFamily::TypeIMinimum, 4, &data, Some(&dir.join("truth.csv"))).unwrap();
    let mut cfg = RunConfig { data: Some(data), out: dir.join("out"), ..RunConfig::default() };
    cfg.sampler.iters = 300;
    cfg.sampler.burnin = 150;
    cfg.sampler.seed = 9;
    cfg
}

#[test]
fn toy_fit_runs_and_reingests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path());
    let chain = fit(&cfg).unwrap();
    assert_eq!(chain.len(), 5);
    let back = read_chain(&Layout::new(&cfg.out).chain()).unwrap();
    assert_eq!(back, chain);
    assert_eq!(RunConfig::load(&cfg.out.join(ECHO_FILE)).unwrap(), cfg);
}

#[test]
fn pipeline_is_idempotent_and_counts_add_up() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim(dir.path(), 60);
    fit(&cfg).unwrap();
    let best = stratify(&cfg).unwrap();
    let layout = Layout::new(&cfg.out);
    let summary = fs::read_to_string(layout.partition().join(STRATA_SUMMARY_FILE)).unwrap();
    let mut total = 0;
    let mut exact_plus_censored = 0;
    for line in summary.lines().skip(1) {
        let f: Vec<usize> = line.split(',').take(4).map(|s| s.parse().unwrap()).collect();
        total += f[1];
        exact_plus_censored += f[2] + f[3];
    }
    assert_eq!(total, 60);
    assert_eq!(exact_plus_censored, 60);
    assert_eq!(best.partition.n(), 60);

    let refitted = refit(&cfg).unwrap();
    assert_eq!(refitted.strata.len() + refitted.skipped.len(), best.partition.k());
    let gaps = report(&cfg, &CurveRequest { points: 20, ..Default::default() }).unwrap();
    assert!(gaps.is_empty(), "{gaps:?}");

    let snapshot = |sub: &str| -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = walk(&cfg.out.join(sub))
            .into_iter()
            .map(|p| (p.display().to_string(), fs::read_to_string(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let first = (snapshot("chain"), snapshot("partition"), snapshot("refit"), snapshot("report"));
    fit(&cfg).unwrap();
    stratify(&cfg).unwrap();
    refit(&cfg).unwrap();
    report(&cfg, &CurveRequest { points: 20, ..Default::default() }).unwrap();
    let second = (snapshot("chain"), snapshot("partition"), snapshot("refit"), snapshot("report"));
    assert!(first == second, "rerunning the pipeline changed its outputs");
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn report_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path());
    let gaps = report(&cfg, &CurveRequest { points: 5, ..Default::default() }).unwrap();
    assert!(gaps.iter().any(|g| g.starts_with("scores")));
    assert!(gaps.iter().any(|g| g.starts_with("diagnostics")));
    assert!(gaps.iter().any(|g| g.starts_with("strata")));
    let text = fs::read_to_string(Layout::new(&cfg.out).report().join(GAPS_FILE)).unwrap();
    assert_eq!(text.lines().count(), gaps.len());
}

#[test]
fn stratify_without_chain_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(stratify(&toy(dir.path())).is_err());
}

#[test]
fn compare_scores_each_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sim(dir.path(), 30);
    cfg.sampler.iters = 120;
    cfg.sampler.burnin = 60;
    cfg.match_sweeps = 500;
    let rows = compare(&cfg, &KernelFamily::ALL, true).unwrap();
    assert_eq!(rows.len(), 3);
    for (_, s) in &rows {
        assert!(s.lpml.is_finite() && s.waic.is_finite());
    }
    let dp = fs::read_to_string(Layout::new(&cfg.out).compare().join("scores_dp.csv")).unwrap();
    assert_eq!(dp.lines().count(), 4);
}

#[test]
fn flags_override_config_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cli = Cli::try_parse_from([
        "survstrat", "fit", "--out", out.to_str().unwrap(), "--data", "d.csv", "--variant", "m1", "--kernel", "normal",
        "--measure", "py", "--py-sigma", "0.5", "--iters", "77", "--burnin", "7", "--alpha-prior", "2,3", "--fixed-tau",
    ])
    .unwrap();
    let Command::Fit(args) = cli.command else { panic!() };
    let cfg = args.resolve().unwrap();
    assert_eq!(cfg.variant, ModelVariant::M1);
    assert_eq!(cfg.kernel, KernelFamily::Normal);
    assert_eq!(cfg.measure, MixingMeasure::Py { theta: 1.0, sigma: 0.5 });
    assert_eq!(cfg.sampler.iters, 77);
    assert_eq!(cfg.sampler.alpha_mode, AlphaMode::GammaPrior { shape: 2.0, rate: 3.0 });
    assert_eq!(cfg.sampler.tau_mode, TauMode::Fixed);

    cfg.write_echo().unwrap();
    let again = RunArgs { out: Some(out), iters: Some(50), ..Default::default() }.resolve().unwrap();
    assert_eq!(again.sampler.iters, 50);
    assert_eq!(again.sampler.burnin, 7);
    assert_eq!(again.measure, cfg.measure);
    assert_eq!(again.data, cfg.data);
}

#[test]
fn bad_flags_are_rejected() {
    assert!(Cli::try_parse_from(["survstrat", "fit", "--variant", "m7"]).is_err());
    assert!(Cli::try_parse_from(["survstrat", "fit", "--alpha-prior", "2"]).is_err());
    let args = RunArgs { measure: Some("gamma".into()), ..Default::default() };
    assert!(args.resolve().is_err());
    let args = RunArgs { level: Some(1.5), ..Default::default() };
    assert!(args.resolve().is_err());
}

#[test]
fn all_subcommands_parse() {
    for sub in ["fit", "stratify", "refit", "curves", "compare", "diag", "report"] {
        Cli::try_parse_from(["survstrat", sub]).unwrap();
    }
    Cli::try_parse_from(["survstrat", "simulate", "--output", "x.csv"]).unwrap();
    Cli::try_parse_from(["survstrat", "study", "--full"]).unwrap();
    assert!(Cli::try_parse_from(["survstrat", "study", "--full", "--replicates", "3"]).is_err());
}
