use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixing::batch_means_se;

/// Shortest series accepted by [`geweke`].
pub const GEWEKE_MIN_LEN: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `None` when both segment variances vanish (0/0).
    pub geweke_z: Option<f64>,
    pub acf: Vec<f64>,
}

/// Sample autocorrelations at lags `0..=max_lag`. A constant series has
/// autocorrelation 1 at lag 0 and 0 elsewhere.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Domain("autocorrelation needs at least two values".into()));
    }
    let max_lag = max_lag.min(n - 1);
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    let mut out = vec![1.0];
    for lag in 1..=max_lag {
        if c0 == 0.0 {
            out.push(0.0);
        } else {
            out.push(dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / c0);
        }
    }
    Ok(out)
}

/// Geweke z-score comparing the mean of the first 10% of the series with
/// the mean of the last 50%, with batch-means standard errors.
pub fn geweke(series: &[f64]) -> Result<Option<f64>> {
    let n = series.len();
    if n < GEWEKE_MIN_LEN {
        return Err(Error::Domain(format!("Geweke diagnostic needs at least {GEWEKE_MIN_LEN} values, got {n}")));
    }
    let a = &series[..n / 10];
    let b = &series[n - n / 2..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = batch_means_se(a).powi(2) + batch_means_se(b).powi(2);
    if !(var > 0.0) {
        return Ok(None);
    }
    Ok(Some((mean(a) - mean(b)) / var.sqrt()))
}

pub fn diagnostics(series: &[f64], max_lag: usize) -> Result<Diagnostics> {
    Ok(Diagnostics { geweke_z: geweke(series)?, acf: acf(series, max_lag)? })
}
