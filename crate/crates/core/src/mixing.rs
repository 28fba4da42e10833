//! Mixing random measures: normalized inverse-Gaussian (N-IG), Dirichlet and
//! Pitman-Yor processes, and the base measure used to draw fresh cluster
//! parameters.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};
use crate::kernels::{ClusterParams, Dataset};
use crate::quadrature::integrate_half_line;

const LN_2_SQRT_PI: f64 = 1.265_512_123_484_645_4; // ln(2 * sqrt(pi))

/// Largest sample size accepted by the partition-probability oracle.
pub const EPPF_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MixingMeasure {
    /// Normalized inverse-Gaussian process with Lévy intensity
    /// `alpha * rho(s)`, `rho(s) = s^{-3/2} e^{-tau s} / (2 sqrt(pi))`.
    Nig { alpha: f64, tau: f64 },
    /// Dirichlet process with total mass `mass`.
    Dp { mass: f64 },
    /// Pitman-Yor process with strength `theta` and discount `sigma`.
    Py { theta: f64, sigma: f64 },
}

/// Unnormalized prior factors of the allocation full conditional.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveWeights {
    /// One factor per existing cluster.
    pub existing: Vec<f64>,
    /// Factor for each of the `r` auxiliary (fresh) components.
    pub new_per_aux: f64,
}

impl MixingMeasure {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MixingMeasure::Nig { alpha, tau } => alpha > 0.0 && tau > 0.0 && alpha.is_finite() && tau.is_finite(),
            MixingMeasure::Dp { mass } => mass > 0.0 && mass.is_finite(),
            MixingMeasure::Py { theta, sigma } => (0.0..1.0).contains(&sigma) && theta > -sigma && theta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid mixing measure parameters {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MixingMeasure::Nig { .. } => "nig",
            MixingMeasure::Dp { .. } => "dp",
            MixingMeasure::Py { .. } => "py",
        }
    }

    pub fn is_nig(&self) -> bool {
        matches!(self, MixingMeasure::Nig { .. })
    }

    fn nig(&self, op: &'static str) -> Result<(f64, f64)> {
        match *self {
            MixingMeasure::Nig { alpha, tau } => Ok((alpha, tau)),
            _ => Err(Error::UnsupportedMeasure { op, measure: self.name() }),
        }
    }

    /// Laplace exponent `psi(u) = sqrt(u + tau) - sqrt(tau)`.
    pub fn psi(&self, u: f64) -> Result<f64> {
        let (_, tau) = self.nig("psi")?;
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("psi requires u >= 0, got {u}")));
        }
        Ok(nig_psi(u, tau))
    }

    /// `kappa_nj(u) = Gamma(nj - 1/2) / (2 sqrt(pi)) * (u + tau)^{1/2 - nj}`.
    pub fn kappa(&self, nj: usize, u: f64) -> Result<f64> {
        Ok(self.ln_kappa(nj, u)?.exp())
    }

    pub fn ln_kappa(&self, nj: usize, u: f64) -> Result<f64> {
        let (_, tau) = self.nig("kappa")?;
        if nj == 0 {
            return Err(Error::Domain("kappa requires nj >= 1".into()));
        }
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("kappa requires u >= 0, got {u}")));
        }
        Ok(nig_ln_kappa(nj, u, tau))
    }

    /// Prior factors of the allocation full conditional given the sizes of
    /// the clusters left after removing the observation being moved, the
    /// auxiliary variable `u` (N-IG only) and the number `r` of auxiliary
    /// components.
    pub fn predictive_weights(&self, sizes: &[usize], u: f64, r: usize) -> Result<PredictiveWeights> {
        if r == 0 {
            return Err(Error::Domain("number of auxiliary components must be >= 1".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::Domain("cluster sizes must be >= 1".into()));
        }
        let k = sizes.len() as f64;
        let r = r as f64;
        let (existing, new_total) = match *self {
            MixingMeasure::Nig { alpha, tau } => {
                if !(u >= 0.0) {
                    return Err(Error::Domain(format!("u must be >= 0, got {u}")));
                }
                (
                    sizes.iter().map(|&s| s as f64 - 0.5).collect(),
                    alpha * (u + tau).sqrt() / 2.0,
                )
            }
            MixingMeasure::Dp { mass } => (sizes.iter().map(|&s| s as f64).collect(), mass),
            MixingMeasure::Py { theta, sigma } => (
                sizes.iter().map(|&s| s as f64 - sigma).collect(),
                theta + k * sigma,
            ),
        };
        Ok(PredictiveWeights { existing, new_per_aux: new_total / r })
    }

    /// Prior probability of one labelled set partition whose block sizes
    /// are `composition`.
    ///
    /// N-IG probabilities come from integrating the auxiliary-variable joint
    /// density over `u`; Dirichlet and Pitman-Yor use their closed forms.
    pub fn eppf(&self, composition: &[usize]) -> Result<f64> {
        if composition.is_empty() || composition.contains(&0) {
            return Err(Error::Domain("composition entries must be >= 1".into()));
        }
        let n: usize = composition.iter().sum();
        if n > EPPF_MAX_N {
            return Err(Error::OracleScale { n, limit: EPPF_MAX_N });
        }
        self.validate()?;
        let k = composition.len();
        match *self {
            MixingMeasure::Nig { alpha, tau } => {
                let log_const = k as f64 * alpha.ln() - ln_gamma(n as f64);
                let integrand = |u: f64| {
                    if u <= 0.0 {
                        return 0.0;
                    }
                    let mut l = log_const + (n as f64 - 1.0) * u.ln() - alpha * nig_psi(u, tau);
                    for &nj in composition {
                        l += nig_ln_kappa(nj, u, tau);
                    }
                    l.exp()
                };
                Ok(integrate_half_line(integrand, 1e-10, 1e-10)?.value)
            }
            MixingMeasure::Dp { mass } => {
                let mut p = mass.powi(k as i32) / rising(mass, n);
                for &nj in composition {
                    p *= rising(1.0, nj - 1);
                }
                Ok(p)
            }
            MixingMeasure::Py { theta, sigma } => {
                let mut num = 1.0;
                for j in 1..k {
                    num *= theta + j as f64 * sigma;
                }
                let mut p = num / rising(theta + 1.0, n - 1);
                for &nj in composition {
                    p *= rising(1.0 - sigma, nj - 1);
                }
                Ok(p)
            }
        }
    }
}

#[inline]
pub(crate) fn nig_psi(u: f64, tau: f64) -> f64 {
    // sqrt(u + tau) - sqrt(tau), written to avoid cancellation for small u
    u / ((u + tau).sqrt() + tau.sqrt())
}

#[inline]
pub(crate) fn nig_ln_kappa(nj: usize, u: f64, tau: f64) -> f64 {
    ln_gamma(nj as f64 - 0.5) - LN_2_SQRT_PI + (0.5 - nj as f64) * (u + tau).ln()
}

/// Rising factorial `(x)_m = x (x + 1) ... (x + m - 1)`.
fn rising(x: f64, m: usize) -> f64 {
    (0..m).map(|i| x + i as f64).product()
}

/// Exact prior expected number of clusters of a Dirichlet process.
pub fn dp_expected_clusters(mass: f64, n: usize) -> f64 {
    (0..n).map(|i| mass / (mass + i as f64)).sum()
}

/// Total mass of the Dirichlet process whose prior expected number of
/// clusters among `n` observations equals `target`.
pub fn dp_mass_matching(target: f64, n: usize) -> Result<f64> {
    if !(target > 1.0 && target < n as f64) {
        return Err(Error::Domain(format!(
            "target expected cluster count {target} must lie in (1, {n})"
        )));
    }
    // bracket in log-mass, then bisect
    let (mut lo, mut hi) = (-50.0f64, 0.0f64);
    while dp_expected_clusters(hi.exp(), n) < target {
        hi += 5.0;
        if hi > 700.0 {
            return Err(Error::Estimation("could not bracket the DP mass".into()));
        }
    }
    while dp_expected_clusters(lo.exp(), n) > target {
        lo -= 50.0;
        if lo < -700.0 {
            return Err(Error::Estimation("could not bracket the DP mass".into()));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if dp_expected_clusters(mid.exp(), n) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi.exp() - lo.exp() <= 1e-12 * hi.exp().max(1.0) {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Monte Carlo (or exact) prior expected number of clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCountEstimate {
    pub mean: f64,
    /// Batch-means standard error; zero for exact values.
    pub std_error: f64,
}

/// Prior expected number of clusters among `n` observations.
///
/// Exact for the Dirichlet process. For N-IG and Pitman-Yor the prior
/// partition law is simulated by running the marginal sampler with unit
/// likelihood for `sweeps` sweeps (`tau` held fixed).
pub fn prior_expected_clusters<R: Rng + ?Sized>(
    measure: &MixingMeasure,
    n: usize,
    sweeps: usize,
    rng: &mut R,
) -> Result<ClusterCountEstimate> {
    measure.validate()?;
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if let MixingMeasure::Dp { mass } = *measure {
        return Ok(ClusterCountEstimate { mean: dp_expected_clusters(mass, n), std_error: 0.0 });
    }
    use crate::sampler::{self, AlphaMode, LikelihoodMode, ModelVariant, SamplerConfig, TauMode};
    let data = Dataset::from_flat(vec![0.0; n], vec![true; n], vec![], 0)?;
    let burnin = (sweeps / 10).max(100);
    let config = SamplerConfig {
        iters: burnin + sweeps.max(1),
        burnin,
        thin: 1,
        alpha_mode: AlphaMode::Fixed,
        tau_mode: TauMode::Fixed,
        likelihood: LikelihoodMode::Unit,
        seed: rng.random(),
        record_loglik: false,
        ..SamplerConfig::default()
    };
    let chain = sampler::run(&data, ModelVariant::M0, crate::KernelFamily::Normal, *measure, &config)?;
    let ks: Vec<f64> = chain.draws.iter().map(|d| d.k() as f64).collect();
    Ok(ClusterCountEstimate {
        mean: ks.iter().sum::<f64>() / ks.len() as f64,
        std_error: batch_means_se(&ks),
    })
}

pub(crate) fn batch_means_se(series: &[f64]) -> f64 {
    let len = series.len();
    let batch = ((len as f64).sqrt() as usize).max(1);
    let nb = len / batch;
    if nb < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..nb)
        .map(|b| series[b * batch..(b + 1) * batch].iter().sum::<f64>() / batch as f64)
        .collect();
    let m = means.iter().sum::<f64>() / nb as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nb - 1) as f64;
    (var / nb as f64).sqrt()
}

/// Centering measure for cluster parameters: independent normals for the
/// location and the regression coefficients, inverse gamma for the scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseMeasure {
    /// Normal means for `(mu, theta_1, ..., theta_q)`.
    pub mu0: Vec<f64>,
    /// Normal variances for `(mu, theta_1, ..., theta_q)`.
    pub tau0sq: Vec<f64>,
    /// Inverse-gamma shape for zeta.
    pub q0_gamma: f64,
    /// Inverse-gamma scale for zeta.
    pub q1_gamma: f64,
}

impl BaseMeasure {
    pub fn new(mu0: Vec<f64>, tau0sq: Vec<f64>, q0_gamma: f64, q1_gamma: f64) -> Result<Self> {
        let b = Self { mu0, tau0sq, q0_gamma, q1_gamma };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu0.is_empty() || self.mu0.len() != self.tau0sq.len() {
            return Err(Error::Config("base measure needs matching, non-empty mu0 and tau0sq".into()));
        }
        if self.tau0sq.iter().any(|v| !(*v > 0.0)) || !(self.q0_gamma > 0.0) || !(self.q1_gamma > 0.0) {
            return Err(Error::Config("base measure variances and inverse-gamma parameters must be positive".into()));
        }
        Ok(())
    }

    /// Number of regression coefficients carried by each cluster.
    pub fn n_theta(&self) -> usize {
        self.mu0.len() - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ClusterParams {
        let draw = |m: f64, v: f64, rng: &mut R| Normal::new(m, v.sqrt()).expect("valid normal").sample(rng);
        let mu = draw(self.mu0[0], self.tau0sq[0], rng);
        let theta = (1..self.mu0.len())
            .map(|l| draw(self.mu0[l], self.tau0sq[l], rng))
            .collect();
        let precision: f64 = Gamma::new(self.q0_gamma, 1.0 / self.q1_gamma)
            .expect("valid gamma")
            .sample(rng);
        ClusterParams { mu, theta, zeta: 1.0 / precision }
    }

    /// Log density of `params` under the base measure (zeta on its natural
    /// scale).
    pub fn log_density(&self, params: &ClusterParams) -> f64 {
        let mut l = normal_ln_pdf(params.mu, self.mu0[0], self.tau0sq[0]);
        for (t, (m, v)) in params.theta.iter().zip(self.mu0[1..].iter().zip(&self.tau0sq[1..])) {
            l += normal_ln_pdf(*t, *m, *v);
        }
        let (a, b) = (self.q0_gamma, self.q1_gamma);
        l + a * b.ln() - ln_gamma(a) - (a + 1.0) * params.zeta.ln() - b / params.zeta
    }
}

pub(crate) fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + var.ln() + std::f64::consts::TAU.ln())
}
