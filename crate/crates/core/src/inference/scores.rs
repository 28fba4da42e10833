use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::Chain;

/// Divisor of the across-draw variance in the WAIC penalty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceConvention {
    /// Divide by the number of draws; WAIC is then unchanged when the draw
    /// set is duplicated.
    #[default]
    Population,
    /// Divide by the number of draws minus one.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitScores {
    pub lpml: f64,
    pub waic: f64,
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Column `i` of the draw-by-observation log-likelihood matrix, keeping
/// only finite values.
fn finite_column(rows: &[&[f64]], i: usize) -> Result<Vec<f64>> {
    let col: Vec<f64> = rows.iter().map(|r| r[i]).filter(|v| v.is_finite()).collect();
    if col.len() < rows.len() {
        log::warn!(
            "observation {}: {} of {} draws have non-finite log-likelihood and are ignored",
            i + 1,
            rows.len() - col.len(),
            rows.len()
        );
    }
    if col.is_empty() {
        return Err(Error::Domain(format!("observation {} has no finite log-likelihood", i + 1)));
    }
    Ok(col)
}

fn check_matrix(rows: &[&[f64]]) -> Result<usize> {
    let Some(first) = rows.first() else {
        return Err(Error::Domain("no draws".into()));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::Domain("per-observation log-likelihoods were not recorded".into()));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("draws carry different numbers of observations".into()));
    }
    Ok(n)
}

/// Log conditional predictive ordinates: minus the log of the mean inverse
/// likelihood of each observation across draws.
pub fn log_cpo(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let n = check_matrix(rows)?;
    (0..n)
        .map(|i| {
            let col = finite_column(rows, i)?;
            let m = col.len() as f64;
            Ok(m.ln() - log_sum_exp(col.iter().map(|v| -v)))
        })
        .collect()
}

pub fn lpml_loglik(rows: &[&[f64]]) -> Result<f64> {
    Ok(log_cpo(rows)?.iter().sum())
}

pub fn lpml(chain: &Chain) -> Result<f64> {
    lpml_loglik(&chain.loglik())
}

/// `-2 (lppd - p_waic)`.
pub fn waic_loglik(rows: &[&[f64]], convention: VarianceConvention) -> Result<f64> {
    let n = check_matrix(rows)?;
    if rows.len() < 2 {
        return Err(Error::Domain("WAIC needs at least two draws".into()));
    }
    let (mut lppd, mut p) = (0.0, 0.0);
    for i in 0..n {
        let col = finite_column(rows, i)?;
        let m = col.len() as f64;
        lppd += log_sum_exp(col.iter().copied()) - m.ln();
        let mean = col.iter().sum::<f64>() / m;
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        p += match convention {
            VarianceConvention::Population => ss / m,
            VarianceConvention::Sample if col.len() >= 2 => ss / (m - 1.0),
            VarianceConvention::Sample => 0.0,
        };
    }
    Ok(-2.0 * (lppd - p))
}

pub fn waic(chain: &Chain, convention: VarianceConvention) -> Result<f64> {
    waic_loglik(&chain.loglik(), convention)
}

pub fn fit_scores(chain: &Chain) -> Result<FitScores> {
    Ok(FitScores { lpml: lpml(chain)?, waic: waic(chain, VarianceConvention::default())? })
}
