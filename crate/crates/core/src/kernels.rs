//! Standardized log-location-scale kernels for log survival times.
//!
//! Each family is parameterized so that the standardized variable has mean
//! zero and unit variance; an observation follows
//! `Y = mu - theta'x + zeta * Y0`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// pi / sqrt(6): rate of the standardized type-I minimum variable.
const EV_RATE: f64 = PI / 2.449_489_742_783_178;
/// pi / sqrt(3): rate of the standardized logistic variable.
const LOGIS_RATE: f64 = PI / 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// Type-I minimum (Gumbel-min) for Y; Weibull for T.
    TypeIMinimum,
    /// Logistic for Y; log-logistic for T.
    Logistic,
    /// Normal for Y; log-normal for T.
    Normal,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::TypeIMinimum,
        KernelFamily::Logistic,
        KernelFamily::Normal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::TypeIMinimum => "type-i-minimum",
            KernelFamily::Logistic => "logistic",
            KernelFamily::Normal => "normal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "type-i-minimum" | "type1min" | "weibull" | "ev" | "gumbel" => Ok(Self::TypeIMinimum),
            "logistic" | "loglogistic" | "log-logistic" => Ok(Self::Logistic),
            "normal" | "lognormal" | "log-normal" | "gaussian" => Ok(Self::Normal),
            other => Err(Error::Config(format!("unknown kernel family `{other}`"))),
        }
    }

    /// Log density of the standardized variable Y0 at `z`.
    #[inline]
    pub fn std_log_density(self, z: f64) -> f64 {
        match self {
            KernelFamily::TypeIMinimum => {
                let w = EV_RATE * z - EULER_GAMMA;
                w - w.exp() + EV_RATE.ln()
            }
            KernelFamily::Logistic => {
                let a = LOGIS_RATE * z;
                // log(e^{-a} / (1 + e^{-a})^2), symmetric in a
                let a = a.abs();
                LOGIS_RATE.ln() - a - 2.0 * (-a).exp().ln_1p()
            }
            KernelFamily::Normal => -0.5 * z * z - LN_SQRT_2PI,
        }
    }

    /// Log survival function of Y0 at `z`.
    #[inline]
    pub fn std_log_survival(self, z: f64) -> f64 {
        match self {
            KernelFamily::TypeIMinimum => -(EV_RATE * z - EULER_GAMMA).exp(),
            KernelFamily::Logistic => -softplus(LOGIS_RATE * z),
            KernelFamily::Normal => log_normal_sf(z),
        }
    }

    /// Draws the standardized variable Y0.
    pub fn std_sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            KernelFamily::TypeIMinimum => {
                // S(z) = U  =>  e^w = -ln U
                let u: f64 = open_unit(rng);
                ((-u.ln()).ln() + EULER_GAMMA) / EV_RATE
            }
            KernelFamily::Logistic => {
                let u: f64 = open_unit(rng);
                (u / (1.0 - u)).ln() / LOGIS_RATE
            }
            KernelFamily::Normal => StandardNormal.sample(rng),
        }
    }

    /// Censored log-likelihood contribution of a log time `y` for an
    /// observation with linear location `location = mu - theta'x`.
    #[inline]
    pub fn censored_log_lik(self, y: f64, exact: bool, location: f64, zeta: f64) -> f64 {
        let z = (y - location) / zeta;
        if exact {
            self.std_log_density(z) - zeta.ln()
        } else {
            self.std_log_survival(z)
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[inline]
fn softplus(a: f64) -> f64 {
    if a > 0.0 {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// log(1 - Phi(z)), accurate in relative terms deep in the upper tail.
pub fn log_normal_sf(z: f64) -> f64 {
    if z < 0.0 {
        (-0.5 * erfc(-z / SQRT_2)).ln_1p()
    } else if z < 37.0 {
        (0.5 * erfc(z / SQRT_2)).ln()
    } else {
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - z.ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Parameters `(mu, theta, zeta)` of one mixture component.
///
/// `theta` is empty when covariate effects are absent from the component
/// (models without covariates, or a common coefficient vector held
/// elsewhere).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub mu: f64,
    pub theta: Vec<f64>,
    pub zeta: f64,
}

impl ClusterParams {
    pub fn new(mu: f64, theta: Vec<f64>, zeta: f64) -> Result<Self> {
        let p = Self { mu, theta, zeta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(Error::Domain(format!("scale zeta must be positive and finite, got {}", self.zeta)));
        }
        if !self.mu.is_finite() || self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("cluster parameters must be finite".into()));
        }
        Ok(())
    }

    /// `mu - theta'x`; an empty `theta` contributes nothing.
    #[inline]
    pub fn location(&self, x: &[f64]) -> f64 {
        self.mu - dot(&self.theta, x)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn check_point(y: f64, x: &[f64], params: &ClusterParams) -> Result<()> {
    if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("observation and covariates must be finite".into()));
    }
    params.validate()?;
    if !params.theta.is_empty() && params.theta.len() != x.len() {
        return Err(Error::Domain(format!(
            "theta has {} entries but x has {}",
            params.theta.len(),
            x.len()
        )));
    }
    Ok(())
}

/// log f*(y | mu, theta, zeta, x).
pub fn log_density(family: KernelFamily, y: f64, x: &[f64], params: &ClusterParams) -> Result<f64> {
    check_point(y, x, params)?;
    Ok(family.censored_log_lik(y, true, params.location(x), params.zeta))
}

/// log S*(y | mu, theta, zeta, x).
pub fn log_survival(family: KernelFamily, y: f64, x: &[f64], params: &ClusterParams) -> Result<f64> {
    check_point(y, x, params)?;
    Ok(family.censored_log_lik(y, false, params.location(x), params.zeta))
}

pub fn sample<R: Rng + ?Sized>(
    family: KernelFamily,
    params: &ClusterParams,
    x: &[f64],
    rng: &mut R,
) -> Result<f64> {
    check_point(0.0, x, params)?;
    Ok(params.location(x) + params.zeta * family.std_sample(rng))
}

/// Log survival times with censoring indicators and covariates.
///
/// `delta[i] == true` marks an exact observation, `false` a right-censored
/// one. Covariates are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    delta: Vec<bool>,
    x: Vec<f64>,
    p: usize,
}

impl Dataset {
    pub fn new(y: Vec<f64>, delta: Vec<bool>, x_rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        if delta.len() != n || x_rows.len() != n {
            return Err(Error::Domain(format!(
                "length mismatch: {} responses, {} indicators, {} covariate rows",
                n,
                delta.len(),
                x_rows.len()
            )));
        }
        let p = x_rows.first().map_or(0, Vec::len);
        if x_rows.iter().any(|r| r.len() != p) {
            return Err(Error::Domain("covariate rows have unequal lengths".into()));
        }
        let x: Vec<f64> = x_rows.into_iter().flatten().collect();
        Self::from_flat(y, delta, x, p)
    }

    pub fn from_flat(y: Vec<f64>, delta: Vec<bool>, x: Vec<f64>, p: usize) -> Result<Self> {
        if delta.len() != y.len() || x.len() != y.len() * p {
            return Err(Error::Domain("dataset dimensions are inconsistent".into()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("response {i} is not finite")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("covariates must be finite".into()));
        }
        Ok(Self { y, delta, x, p })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn n_censored(&self) -> usize {
        self.delta.iter().filter(|d| !**d).count()
    }

    /// Rows `rows` as a new dataset, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(rows.len() * self.p);
        for &i in rows {
            x.extend_from_slice(self.x(i));
        }
        Dataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            delta: rows.iter().map(|&i| self.delta[i]).collect(),
            x,
            p: self.p,
        }
    }

    /// Shifts every covariate column to zero empirical mean.
    pub fn centered(&self) -> Dataset {
        let mut out = self.clone();
        let n = self.n();
        if n == 0 {
            return out;
        }
        for l in 0..self.p {
            let mean = (0..n).map(|i| self.x[i * self.p + l]).sum::<f64>() / n as f64;
            for i in 0..n {
                out.x[i * self.p + l] -= mean;
            }
        }
        out
    }

    pub(crate) fn set_observation(&mut self, i: usize, y: f64, exact: bool) {
        self.y[i] = y;
        self.delta[i] = exact;
    }

    pub fn mean_y(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.n() as f64
    }

    /// Sample variance (n - 1 denominator) of the responses.
    pub fn var_y(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 1.0;
        }
        let m = self.mean_y();
        self.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Population standard deviation of covariate column `l`.
    pub fn covariate_sd(&self, l: usize) -> f64 {
        let n = self.n();
        if n == 0 {
            return 1.0;
        }
        let col = (0..n).map(|i| self.x[i * self.p + l]);
        let m = col.clone().sum::<f64>() / n as f64;
        (col.map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt()
    }
}
