//! Marginal Gibbs sampler for mixtures of accelerated life models with
//! right-censored responses.
//!
//! Cluster allocations are updated one observation at a time with `r`
//! auxiliary components drawn from the base measure; the N-IG auxiliary
//! variable `u` and the hyperparameter `tau` are updated by random-walk
//! Metropolis-Hastings on the log scale; `alpha` optionally by its
//! conjugate gamma full conditional; cluster parameters are refreshed by a
//! reshuffling Metropolis step and, under the common-coefficient model, the
//! shared coefficients are updated one coordinate at a time.

mod chain;
pub mod io;
mod run;
mod state;
mod updates;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Dataset;
use crate::mixing::BaseMeasure;

pub use chain::{Chain, Draw};
pub use run::{run, Sampler};
pub use state::{Cluster, Model, SamplerState};
pub use updates::{
    alpha_full_conditional, log_target_tau, log_target_u, reshuffle_clusters, update_allocation, update_alpha,
    update_tau, update_theta_common, update_u, MhOutcome,
};

/// How covariate effects enter the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// No covariate effect.
    M0,
    /// One coefficient vector shared by every cluster.
    M1,
    /// Cluster-specific coefficients.
    M2,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::M0, ModelVariant::M1, ModelVariant::M2];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M0" => Ok(Self::M0),
            "M1" => Ok(Self::M1),
            "M2" => Ok(Self::M2),
            other => Err(Error::Config(format!("unknown model variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum AlphaMode {
    /// Keep the N-IG `alpha` of the mixing measure.
    Fixed,
    /// Gamma(shape, rate) prior with conjugate updates.
    GammaPrior { shape: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TauMode {
    /// Keep the N-IG `tau` of the mixing measure.
    Fixed,
    /// Gamma(shape, rate) prior, Metropolis updates on log tau.
    GammaPrior { shape: f64, rate: f64 },
}

/// Whether the data enter the allocation and parameter updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodMode {
    Data,
    /// Every likelihood factor is replaced by one, so the chain targets the
    /// prior. Used to check the sampler against the partition prior.
    Unit,
}

/// Base measure, either given explicitly or built from the data it is run on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BaseSpec {
    Fixed(BaseMeasure),
    /// Location prior `N(mean(y), var(y))`, coefficient priors
    /// `N(theta_mean, theta_var)` (cluster-specific model only) and an
    /// inverse-gamma(q0, q1) scale prior.
    Empirical { q0_gamma: f64, q1_gamma: f64, theta_mean: f64, theta_var: f64 },
}

impl Default for BaseSpec {
    fn default() -> Self {
        BaseSpec::Empirical { q0_gamma: 5.0, q1_gamma: 1.0, theta_mean: 0.0, theta_var: 20.0 }
    }
}

impl BaseSpec {
    pub fn resolve(&self, data: &Dataset, variant: ModelVariant) -> Result<BaseMeasure> {
        let q = if variant == ModelVariant::M2 { data.p() } else { 0 };
        let base = match self {
            BaseSpec::Fixed(b) => b.clone(),
            BaseSpec::Empirical { q0_gamma, q1_gamma, theta_mean, theta_var } => {
                if data.is_empty() {
                    return Err(Error::Domain("cannot build an empirical base measure from no data".into()));
                }
                let var_y = data.var_y();
                let var_y = if var_y > 0.0 { var_y } else { 1.0 };
                let mut mu0 = vec![data.mean_y()];
                let mut tau0sq = vec![var_y];
                mu0.extend(std::iter::repeat_n(*theta_mean, q));
                tau0sq.extend(std::iter::repeat_n(*theta_var, q));
                BaseMeasure::new(mu0, tau0sq, *q0_gamma, *q1_gamma)?
            }
        };
        base.validate()?;
        if base.n_theta() != q {
            return Err(Error::Config(format!(
                "base measure carries {} coefficients but model {variant} with p = {} needs {q}",
                base.n_theta(),
                data.p()
            )));
        }
        Ok(base)
    }
}

/// Random-walk proposal scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    /// log u.
    pub u: f64,
    /// log tau.
    pub tau: f64,
    /// Cluster location and coefficients (divided by sqrt of the cluster size).
    pub reshuffle: f64,
    /// Cluster log scale (divided by sqrt of the cluster size).
    pub reshuffle_scale: f64,
    /// Common coefficients (divided by the covariate standard deviation).
    pub theta: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self { u: 1.0, tau: 1.0, reshuffle: 0.5, reshuffle_scale: 0.5, theta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Number of auxiliary components in the allocation update.
    pub r_aux: usize,
    pub steps: StepSizes,
    /// Tune proposal scales during burn-in towards `target_accept`.
    pub adapt: bool,
    pub target_accept: f64,
    pub alpha_mode: AlphaMode,
    pub tau_mode: TauMode,
    /// Prior variance of each common coefficient (model M1).
    pub theta_prior_var: f64,
    pub base: BaseSpec,
    pub likelihood: LikelihoodMode,
    /// Store per-observation log-likelihoods of every retained draw.
    pub record_loglik: bool,
    pub seed: u64,
    /// Random stream under `seed`; distinct tasks sharing a seed use
    /// distinct streams.
    pub stream: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iters: 5000,
            burnin: 3000,
            thin: 1,
            r_aux: 3,
            steps: StepSizes::default(),
            adapt: true,
            target_accept: 0.3,
            alpha_mode: AlphaMode::Fixed,
            tau_mode: TauMode::GammaPrior { shape: 1.0, rate: 1.0 },
            theta_prior_var: 20.0,
            base: BaseSpec::default(),
            likelihood: LikelihoodMode::Data,
            record_loglik: true,
            seed: 0,
            stream: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.iters <= self.burnin {
            return fail("iters must exceed burnin");
        }
        if self.thin == 0 {
            return fail("thin must be >= 1");
        }
        if self.r_aux == 0 {
            return fail("r_aux must be >= 1");
        }
        let s = &self.steps;
        if [s.u, s.tau, s.reshuffle, s.reshuffle_scale, s.theta]
            .iter()
            .any(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return fail("step sizes must be finite and non-negative");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return fail("target_accept must lie in (0, 1)");
        }
        if !(self.theta_prior_var > 0.0) {
            return fail("theta_prior_var must be positive");
        }
        for (name, mode) in [
            ("alpha", matches!(self.alpha_mode, AlphaMode::GammaPrior { shape, rate } if !(shape > 0.0 && rate > 0.0))),
            ("tau", matches!(self.tau_mode, TauMode::GammaPrior { shape, rate } if !(shape > 0.0 && rate > 0.0))),
        ] {
            if mode {
                return Err(Error::Config(format!("{name} gamma prior parameters must be positive")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
