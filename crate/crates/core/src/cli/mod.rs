//! Command-line front end. Every subcommand is a thin wrapper around a
//! function in [`commands`], which library users can call directly.

pub mod commands;
pub mod config;
pub mod data;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{CurveRequest, Layout};
pub use config::{RunConfig, ECHO_FILE};
pub use data::SurvivalTable;

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::mixing::MixingMeasure;
use crate::sampler::{AlphaMode, ModelVariant, TauMode};
use crate::simulation::{Dgp, StudyConfig};

#[derive(Debug, Parser)]
#[command(name = "survstrat", version, about = "Nonparametric Bayesian stratification of survival data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic data set from one of the stratified generators.
    Simulate(SimulateArgs),
    /// Run the mixture sampler and store the chain.
    Fit(RunArgs),
    /// Optimal partition of a stored chain.
    Stratify(RunArgs),
    /// Fit each stratum of the optimal partition on its own.
    Refit(RunArgs),
    /// Predictive, Kaplan-Meier and Weibull curves.
    Curves(CurveArgs),
    /// Score several kernels (and optionally the matched DP) by LPML and WAIC.
    Compare(CompareArgs),
    /// Convergence diagnostics of a stored chain.
    Diag(DiagArgs),
    /// Replicated simulation study.
    Study(StudyArgs),
    /// Collect available outputs into `report/` and list what is missing.
    Report(CurveArgs),
}

fn parse_variant(s: &str) -> std::result::Result<ModelVariant, String> {
    ModelVariant::parse(s).map_err(|e| e.to_string())
}

fn parse_kernel(s: &str) -> std::result::Result<KernelFamily, String> {
    KernelFamily::parse(s).map_err(|e| e.to_string())
}

fn parse_dgp(s: &str) -> std::result::Result<Dgp, String> {
    Dgp::parse(s).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `shape,rate`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration; otherwise `<out>/config.echo` if present.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Survival table with columns time, status, x1..xp.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<ModelVariant>,
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelFamily>,
    /// nig, dp or py.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub py_theta: Option<f64>,
    #[arg(long)]
    pub py_sigma: Option<f64>,
    /// Gamma prior on alpha, as `shape,rate`.
    #[arg(long, value_parser = parse_pair)]
    pub alpha_prior: Option<(f64, f64)>,
    /// Gamma prior on tau, as `shape,rate`.
    #[arg(long, value_parser = parse_pair, conflicts_with = "fixed_tau")]
    pub tau_prior: Option<(f64, f64)>,
    #[arg(long)]
    pub fixed_tau: bool,
    /// Fit the Dirichlet process matched to the N-IG prior expected number of clusters.
    #[arg(long)]
    pub match_dp: bool,
    #[arg(long)]
    pub center: bool,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub r_aux: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub level: Option<f64>,
}

impl RunArgs {
    /// Defaults, then the configuration file (explicit or echoed), then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let out = self.out.clone().unwrap_or_else(|| RunConfig::default().out);
        let echo = out.join(ECHO_FILE);
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None if echo.exists() => RunConfig::load(&echo)?,
            None => RunConfig::default(),
        };
        if self.out.is_some() || self.config.is_none() {
            cfg.out = out;
        }
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(k) = self.kernel {
            cfg.kernel = k;
        }
        if let Some(kind) = &self.measure {
            cfg.measure = match kind.to_ascii_lowercase().as_str() {
                "nig" => MixingMeasure::Nig { alpha: 1.0, tau: 1.0 },
                "dp" => MixingMeasure::Dp { mass: 1.0 },
                "py" => MixingMeasure::Py { theta: 1.0, sigma: 0.25 },
                other => return Err(Error::Config(format!("unknown mixing measure `{other}`"))),
            };
        }
        match &mut cfg.measure {
            MixingMeasure::Nig { alpha, tau } => {
                *alpha = self.alpha.unwrap_or(*alpha);
                *tau = self.tau.unwrap_or(*tau);
            }
            MixingMeasure::Dp { mass } => *mass = self.mass.unwrap_or(*mass),
            MixingMeasure::Py { theta, sigma } => {
                *theta = self.py_theta.unwrap_or(*theta);
                *sigma = self.py_sigma.unwrap_or(*sigma);
            }
        }
        if let Some((shape, rate)) = self.alpha_prior {
            cfg.sampler.alpha_mode = AlphaMode::GammaPrior { shape, rate };
        }
        if let Some((shape, rate)) = self.tau_prior {
            cfg.sampler.tau_mode = TauMode::GammaPrior { shape, rate };
        }
        if self.fixed_tau {
            cfg.sampler.tau_mode = TauMode::Fixed;
        }
        cfg.match_dp |= self.match_dp;
        cfg.center |= self.center;
        let s = &mut cfg.sampler;
        s.iters = self.iters.unwrap_or(s.iters);
        s.burnin = self.burnin.unwrap_or(s.burnin);
        s.thin = self.thin.unwrap_or(s.thin);
        s.r_aux = self.r_aux.unwrap_or(s.r_aux);
        s.seed = self.seed.unwrap_or(s.seed);
        cfg.level = self.level.unwrap_or(cfg.level);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_dgp, default_value = "D2")]
    pub dgp: Dgp,
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    /// Target censoring fraction.
    #[arg(long, default_value_t = 0.0)]
    pub censor: f64,
    #[arg(long, value_parser = parse_kernel, default_value = "type-i-minimum")]
    pub kernel: KernelFamily,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write the generating partition.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Covariate profile, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub x0: Option<Vec<f64>>,
}

impl CurveArgs {
    pub fn request(&self) -> CurveRequest {
        CurveRequest { t_max: self.t_max, points: self.points, x0: self.x0.clone() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_parser = parse_kernel, value_delimiter = ',', default_value = "type-i-minimum,logistic,normal")]
    pub kernels: Vec<KernelFamily>,
    /// Also score the Dirichlet process matched to the N-IG measure.
    #[arg(long)]
    pub dp: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DiagArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// TOML study configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "study.csv")]
    pub output: PathBuf,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Use 50 replicates per cell.
    #[arg(long, conflicts_with = "replicates")]
    pub full: bool,
}

impl StudyArgs {
    pub fn resolve(&self) -> Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(p) => StudyConfig::load(p)?,
            None => StudyConfig::default(),
        };
        if self.full {
            cfg.replicates = 50;
        }
        if let Some(r) = self.replicates {
            cfg.replicates = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            commands::simulate(a.dgp, a.n, a.censor, a.kernel, a.seed, &a.output, a.truth.as_deref())?;
        }
        Command::Fit(a) => {
            commands::fit(&a.resolve()?)?;
        }
        Command::Stratify(a) => {
            commands::stratify(&a.resolve()?)?;
        }
        Command::Refit(a) => {
            commands::refit(&a.resolve()?)?;
        }
        Command::Curves(a) => {
            commands::curves(&a.run.resolve()?, &a.request())?;
        }
        Command::Compare(a) => {
            commands::compare(&a.run.resolve()?, &a.kernels, a.dp)?;
        }
        Command::Diag(a) => {
            commands::diag(&a.run.resolve()?, a.max_lag)?;
        }
        Command::Study(a) => {
            commands::study(&a.resolve()?, &a.output)?;
        }
        Command::Report(a) => {
            commands::report(&a.run.resolve()?, &a.request())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
