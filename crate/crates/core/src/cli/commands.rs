use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{RunConfig, ECHO_FILE};
use super::data::SurvivalTable;
use crate::error::{io_err, Error, Result};
use crate::inference::{
    diagnostics, fit_scores, kaplan_meier, predictive_survival, stratum_refit, weibull_mle, CurveOptions, Diagnostics,
    FitScores, ParameterSummary, Refit, SurvivalCurve,
};
use crate::kernels::{Dataset, KernelFamily};
use crate::mixing::{dp_mass_matching, prior_expected_clusters, MixingMeasure};
use crate::partitions::{optimal_partition, OptimalPartition, Partition};
use crate::rng::{derive_rng, task_stream};
use crate::sampler::io::{fmt_f64, read_chain, write_chain, write_json};
use crate::sampler::{run, Chain};
use crate::simulation::{replicate_study, simulate as simulate_data, write_study_csv, Dgp, StudyConfig, StudyRow};

pub const PARTITION_FILE: &str = "partition.csv";
pub const STRATA_SUMMARY_FILE: &str = "strata_summary.csv";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const SCALES_FILE: &str = "scales.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const GAPS_FILE: &str = "gaps.txt";

/// Fixed output directory layout of a pipeline run.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn echo(&self) -> PathBuf {
        self.root.join(ECHO_FILE)
    }

    pub fn chain(&self) -> PathBuf {
        self.root.join("chain")
    }

    pub fn partition(&self) -> PathBuf {
        self.root.join("partition")
    }

    pub fn refit(&self) -> PathBuf {
        self.root.join("refit")
    }

    pub fn stratum(&self, label: usize) -> PathBuf {
        self.refit().join(format!("stratum_{label}"))
    }

    pub fn compare(&self) -> PathBuf {
        self.root.join("compare")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(io_err(p))
}

fn load_data(cfg: &RunConfig) -> Result<Dataset> {
    SurvivalTable::read(cfg.data_path()?)?.to_dataset(cfg.center)
}

/// Writes simulated data (and optionally the generating partition).
pub fn simulate(
    dgp: Dgp,
    n: usize,
    censor: f64,
    kernel: KernelFamily,
    seed: u64,
    output: &Path,
    truth: Option<&Path>,
) -> Result<Dataset> {
    let spec = dgp.spec(n, kernel, censor);
    let mut rng = derive_rng(seed, task_stream("simulate"));
    let (data, partition, info) = simulate_data(&spec, &mut rng)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    SurvivalTable::from_dataset(&data).write(output)?;
    if let Some(t) = truth {
        partition.write_csv(t)?;
    }
    println!(
        "simulated {dgp}: n = {}, {} censored ({:.3}), written to {}",
        data.n(),
        data.n_censored(),
        info.realized_fraction,
        output.display()
    );
    Ok(data)
}

/// The measure actually fitted: the configured one, or the Dirichlet
/// process matching its prior expected number of clusters.
pub fn resolve_measure(cfg: &RunConfig, n: usize) -> Result<MixingMeasure> {
    if !cfg.match_dp {
        return Ok(cfg.measure);
    }
    let mut rng = derive_rng(cfg.sampler.seed, task_stream("match-dp"));
    let est = prior_expected_clusters(&cfg.measure, n, cfg.match_sweeps, &mut rng)?;
    let mass = dp_mass_matching(est.mean, n)?;
    log::info!(
        "prior expected clusters under {:?}: {:.3} (se {:.3}); matching DP mass {:.4}",
        cfg.measure,
        est.mean,
        est.std_error,
        mass
    );
    Ok(MixingMeasure::Dp { mass })
}

/// Writes the autocorrelation table and scalar summary of the cluster-count
/// series into `dir`.
pub fn write_diagnostics(dir: &Path, chain: &Chain, max_lag: usize) -> Result<Option<Diagnostics>> {
    mkdir(dir)?;
    let ks = chain.k_series();
    let diag = match diagnostics(&ks, max_lag) {
        Ok(d) => Some(d),
        Err(e) => {
            log::warn!("diagnostics skipped: {e}");
            None
        }
    };
    let path = dir.join("diagnostics.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["lag", "acf"])?;
    if let Some(d) = &diag {
        for (lag, a) in d.acf.iter().enumerate() {
            w.write_record([lag.to_string(), fmt_f64(*a)])?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("diagnostics_summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["quantity", "value"])?;
    let geweke = diag.as_ref().and_then(|d| d.geweke_z).map(fmt_f64).unwrap_or_default();
    w.write_record(["geweke_z_k", geweke.as_str()])?;
    let mean_k = ks.iter().sum::<f64>() / ks.len().max(1) as f64;
    w.write_record(["mean_k".to_string(), fmt_f64(mean_k)])?;
    for (name, rate) in &chain.accept_rates {
        w.write_record([format!("accept_{name}"), fmt_f64(*rate)])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(diag)
}

/// Runs the sampler on the configured data and writes `chain/` and the
/// configuration echo.
pub fn fit(cfg: &RunConfig) -> Result<Chain> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let measure = resolve_measure(cfg, data.n())?;
    let chain = run(&data, cfg.variant, cfg.kernel, measure, &cfg.sampler)?;
    let layout = Layout::new(&cfg.out);
    cfg.write_echo()?;
    write_chain(&layout.chain(), &chain)?;
    write_json(&layout.chain().join("measure.json"), &measure)?;
    write_diagnostics(&layout.chain(), &chain, 50)?;
    println!(
        "fitted {} / {} / {}: {} draws, mean k {:.2}, chain in {}",
        cfg.variant,
        cfg.kernel,
        measure.name(),
        chain.len(),
        chain.k_series().iter().sum::<f64>() / chain.len() as f64,
        layout.chain().display()
    );
    Ok(chain)
}

fn read_fitted_chain(layout: &Layout) -> Result<Chain> {
    let dir = layout.chain();
    if !dir.join(crate::sampler::io::META_FILE).exists() {
        return Err(Error::Io {
            path: dir,
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no chain artifacts (run `fit` first)"),
        });
    }
    read_chain(&dir)
}

/// Optimal partition of the fitted chain plus a per-stratum count table.
pub fn stratify(cfg: &RunConfig) -> Result<OptimalPartition> {
    let layout = Layout::new(&cfg.out);
    let chain = read_fitted_chain(&layout)?;
    let data = load_data(cfg)?;
    if data.n() != chain.n {
        return Err(Error::Domain(format!("chain covers {} observations, data has {}", chain.n, data.n())));
    }
    let best = optimal_partition(&chain.partitions())?;
    let dir = layout.partition();
    mkdir(&dir)?;
    best.partition.write_csv(&dir.join(PARTITION_FILE))?;

    let path = dir.join(STRATA_SUMMARY_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["stratum", "total", "exact", "censored", "singleton"])?;
    for (j, rows) in best.partition.blocks().iter().enumerate() {
        let exact = rows.iter().filter(|&&i| data.delta()[i]).count();
        w.write_record([
            (j + 1).to_string(),
            rows.len().to_string(),
            exact.to_string(),
            (rows.len() - exact).to_string(),
            (rows.len() == 1).to_string(),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    write_json(
        &dir.join("optimal.json"),
        &serde_json::json!({ "expected_loss": best.expected_loss, "k": best.partition.k(), "draw_index": best.index }),
    )?;
    println!(
        "optimal partition: {} strata, sizes {:?}, expected VI loss {:.4}",
        best.partition.k(),
        best.partition.sizes(),
        best.expected_loss
    );
    Ok(best)
}

fn write_summaries(path: &Path, rows: &[(usize, &ParameterSummary)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["stratum", "parameter", "median", "lo", "hi", "excludes_zero"])?;
    for (label, s) in rows {
        w.write_record([
            label.to_string(),
            s.parameter.clone(),
            fmt_f64(s.median),
            fmt_f64(s.lo),
            fmt_f64(s.hi),
            s.excludes_zero.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

/// Independent fits of every stratum of the optimal partition.
pub fn refit(cfg: &RunConfig) -> Result<Refit> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out);
    let partition = Partition::read_csv(&layout.partition().join(PARTITION_FILE))?;
    let data = load_data(cfg)?;
    let measure = resolve_measure(cfg, data.n())?;
    let result = stratum_refit(&data, &partition, cfg.variant, cfg.kernel, measure, &cfg.sampler, cfg.level)?;
    let dir = layout.refit();
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
    }
    mkdir(&dir)?;
    for s in &result.strata {
        write_chain(&layout.stratum(s.label), &s.chain)?;
    }
    let coefficients: Vec<(usize, &ParameterSummary)> = result
        .strata
        .iter()
        .flat_map(|s| s.summaries.iter().filter(|p| p.parameter != "zeta").map(move |p| (s.label, p)))
        .collect();
    write_summaries(&dir.join(COEFFICIENTS_FILE), &coefficients)?;
    let scales: Vec<(usize, &ParameterSummary)> = result
        .strata
        .iter()
        .flat_map(|s| s.summaries.iter().filter(|p| p.parameter == "zeta").map(move |p| (s.label, p)))
        .collect();
    write_summaries(&dir.join(SCALES_FILE), &scales)?;
    let path = dir.join("skipped.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["stratum"])?;
    for label in &result.skipped {
        w.write_record([label.to_string()])?;
    }
    w.flush().map_err(io_err(&path))?;
    println!("refitted {} strata ({} singletons skipped)", result.strata.len(), result.skipped.len());
    Ok(result)
}

/// Grid and covariate profile of the curve files.
#[derive(Debug, Clone, Default)]
pub struct CurveRequest {
    /// Largest grid time; defaults to the largest observed time.
    pub t_max: Option<f64>,
    pub points: usize,
    /// Covariate profile; defaults to all zeros.
    pub x0: Option<Vec<f64>>,
}

fn write_curve(path: &Path, c: &SurvivalCurve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "mean", "lo", "hi"])?;
    for k in 0..c.t_grid.len() {
        w.write_record([fmt_f64(c.t_grid[k]), fmt_f64(c.mean[k]), fmt_f64(c.lo[k]), fmt_f64(c.hi[k])])?;
    }
    w.flush().map_err(io_err(path))
}

fn write_km(path: &Path, data: &Dataset, rows: &[usize]) -> Result<()> {
    let t: Vec<f64> = rows.iter().map(|&i| data.y()[i].exp()).collect();
    let d: Vec<bool> = rows.iter().map(|&i| data.delta()[i]).collect();
    let km = kaplan_meier(&t, &d)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "survival"])?;
    w.write_record(["0".to_string(), "1".to_string()])?;
    for (t, s) in km.times.iter().zip(&km.survival) {
        w.write_record([fmt_f64(*t), fmt_f64(*s)])?;
    }
    w.flush().map_err(io_err(path))
}

fn stratum_labels(layout: &Layout) -> Result<Vec<usize>> {
    let dir = layout.refit();
    let mut labels: Vec<usize> = fs::read_dir(&dir)
        .map_err(io_err(&dir))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str()?.strip_prefix("stratum_")?.parse().ok())
        .collect();
    labels.sort_unstable();
    Ok(labels)
}

/// Predictive survival curves (whole-data chain and every refitted stratum),
/// Kaplan-Meier curves and Weibull maximum likelihood curves under
/// `report/`.
pub fn curves(cfg: &RunConfig, req: &CurveRequest) -> Result<usize> {
    let layout = Layout::new(&cfg.out);
    let data = load_data(cfg)?;
    let t_max = req
        .t_max
        .unwrap_or_else(|| data.y().iter().fold(f64::NEG_INFINITY, |m, y| m.max(*y)).exp());
    let points = req.points.max(2);
    let grid: Vec<f64> = (1..=points).map(|k| t_max * k as f64 / points as f64).collect();
    let x0 = req.x0.clone().unwrap_or_else(|| vec![0.0; data.p()]);
    let opts = CurveOptions { level: cfg.level, ..CurveOptions::default() };
    let report = layout.report();
    for sub in ["curves", "km", "mle"] {
        mkdir(&report.join(sub))?;
    }
    let mut written = 0;

    if let Ok(chain) = read_fitted_chain(&layout) {
        let mut rng = derive_rng(cfg.sampler.seed, task_stream("curves/all"));
        write_curve(&report.join("curves/all.csv"), &predictive_survival(&chain, &grid, &x0, &opts, &mut rng)?)?;
        written += 1;
    }
    let all: Vec<usize> = (0..data.n()).collect();
    write_km(&report.join("km/all.csv"), &data, &all)?;

    let labels = if layout.refit().exists() { stratum_labels(&layout)? } else { vec![] };
    let partition = Partition::read_csv(&layout.partition().join(PARTITION_FILE)).ok();
    let mut mle_rows = Vec::new();
    for label in labels {
        let chain = read_chain(&layout.stratum(label))?;
        let mut rng = derive_rng(cfg.sampler.seed, task_stream(&format!("curves/stratum_{label}")));
        let c = predictive_survival(&chain, &grid, &x0, &opts, &mut rng)?;
        write_curve(&report.join(format!("curves/stratum_{label}.csv")), &c)?;
        written += 1;
        let Some(p) = &partition else { continue };
        let Some(rows) = p.blocks().get(label - 1).cloned() else { continue };
        write_km(&report.join(format!("km/stratum_{label}.csv")), &data, &rows)?;
        match weibull_mle(&data.subset(&rows)) {
            Ok(fit) => {
                let path = report.join(format!("mle/stratum_{label}.csv"));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["t", "survival"])?;
                for t in &grid {
                    let s = KernelFamily::TypeIMinimum.std_log_survival((t.ln() - fit.params.mu) / fit.params.zeta).exp();
                    w.write_record([fmt_f64(*t), fmt_f64(s)])?;
                }
                w.flush().map_err(io_err(&path))?;
                mle_rows.push([label.to_string(), fmt_f64(fit.params.mu), fmt_f64(fit.params.zeta), fmt_f64(fit.log_lik), String::new()]);
            }
            Err(e) => mle_rows.push([label.to_string(), String::new(), String::new(), String::new(), e.to_string()]),
        }
    }
    let path = report.join("mle.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["stratum", "mu", "zeta", "log_lik", "error"])?;
    for r in &mle_rows {
        w.write_record(r)?;
    }
    w.flush().map_err(io_err(&path))?;
    println!("wrote {written} predictive curves under {}", report.display());
    Ok(written)
}

fn write_scores(path: &Path, rows: &[(KernelFamily, FitScores)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kernel", "lpml", "waic"])?;
    for (k, s) in rows {
        w.write_record([k.name().to_string(), fmt_f64(s.lpml), fmt_f64(s.waic)])?;
    }
    w.flush().map_err(io_err(path))
}

/// Fits every kernel in `kernels` and scores it by LPML and WAIC. With
/// `with_dp`, the Dirichlet process matched to the configured N-IG measure
/// is scored as well (`scores_dp.csv`).
pub fn compare(cfg: &RunConfig, kernels: &[KernelFamily], with_dp: bool) -> Result<Vec<(KernelFamily, FitScores)>> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let layout = Layout::new(&cfg.out);
    let dir = layout.compare();
    mkdir(&dir)?;
    let mut measures = vec![("scores.csv", resolve_measure(cfg, data.n())?)];
    if with_dp {
        let matched = RunConfig { match_dp: true, ..cfg.clone() };
        measures.push(("scores_dp.csv", resolve_measure(&matched, data.n())?));
    }
    let mut first = Vec::new();
    for (file, measure) in measures {
        let fits = kernels
            .par_iter()
            .map(|&kernel| {
                let stream = task_stream(&format!("compare/{}/{}", measure.name(), kernel.name()));
                let sampler = crate::sampler::SamplerConfig { stream, record_loglik: true, ..cfg.sampler.clone() };
                let chain = run(&data, cfg.variant, kernel, measure, &sampler)?;
                write_chain(&dir.join(format!("{}_{}", measure.name(), kernel.name())), &chain)?;
                Ok((kernel, fit_scores(&chain)?))
            })
            .collect::<Result<Vec<_>>>()?;
        write_scores(&dir.join(file), &fits)?;
        for (k, s) in &fits {
            println!("{:>5} {:>15}  LPML {:>12.3}  WAIC {:>12.3}", measure.name(), k.name(), s.lpml, s.waic);
        }
        if first.is_empty() {
            first = fits;
        }
    }
    Ok(first)
}

/// Convergence diagnostics of the fitted chain under `report/`.
pub fn diag(cfg: &RunConfig, max_lag: usize) -> Result<Option<Diagnostics>> {
    let layout = Layout::new(&cfg.out);
    let chain = read_fitted_chain(&layout)?;
    let d = write_diagnostics(&layout.report(), &chain, max_lag)?;
    if let Some(d) = &d {
        println!("Geweke z on k: {:?}; lag-1 ACF {:.3}", d.geweke_z, d.acf.get(1).copied().unwrap_or(f64::NAN));
    }
    for (name, rate) in &chain.accept_rates {
        println!("acceptance {name}: {rate:.3}");
    }
    Ok(d)
}

pub fn study(config: &StudyConfig, output: &Path) -> Result<Vec<StudyRow>> {
    let rows = replicate_study(config)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    write_study_csv(output, &rows)?;
    let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
    println!("{} study rows ({failed} failed) written to {}", rows.len(), output.display());
    Ok(rows)
}

/// Assembles `report/` from whatever artifacts exist and lists the gaps.
pub fn report(cfg: &RunConfig, req: &CurveRequest) -> Result<Vec<String>> {
    let layout = Layout::new(&cfg.out);
    let dir = layout.report();
    mkdir(&dir)?;
    let mut gaps = Vec::new();

    let compared = layout.compare().join(SCORES_FILE);
    if compared.exists() {
        fs::copy(&compared, dir.join(SCORES_FILE)).map_err(io_err(&compared))?;
    } else {
        match read_fitted_chain(&layout) {
            Ok(chain) => match fit_scores(&chain) {
                Ok(s) => write_scores(&dir.join(SCORES_FILE), &[(chain.family, s)])?,
                Err(e) => gaps.push(format!("scores: {e}")),
            },
            Err(_) => gaps.push("scores: no chain artifacts and no kernel comparison".into()),
        }
    }
    let dp = layout.compare().join("scores_dp.csv");
    if dp.exists() {
        fs::copy(&dp, dir.join("scores_dp.csv")).map_err(io_err(&dp))?;
    }

    match read_fitted_chain(&layout) {
        Ok(chain) => {
            write_diagnostics(&dir, &chain, 50)?;
        }
        Err(_) => gaps.push("diagnostics: no chain artifacts".into()),
    }

    for file in [COEFFICIENTS_FILE, SCALES_FILE] {
        let src = layout.refit().join(file);
        if src.exists() {
            fs::copy(&src, dir.join(file)).map_err(io_err(&src))?;
        } else {
            gaps.push(format!("{file}: no stratum refit"));
        }
    }
    if !layout.partition().join(PARTITION_FILE).exists() {
        gaps.push("strata: no optimal partition".into());
    }
    if cfg.data.is_some() {
        if let Err(e) = curves(cfg, req) {
            gaps.push(format!("curves: {e}"));
        }
    } else {
        gaps.push("curves: no data file configured".into());
    }

    let text = if gaps.is_empty() { "none\n".to_string() } else { gaps.join("\n") + "\n" };
    fs::write(dir.join(GAPS_FILE), text).map_err(io_err(dir.join(GAPS_FILE)))?;
    for g in &gaps {
        println!("gap: {g}");
    }
    Ok(gaps)
}
