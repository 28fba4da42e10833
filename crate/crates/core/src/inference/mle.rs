use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{ClusterParams, Dataset, KernelFamily, EULER_GAMMA};

const RATE: f64 = PI / 2.449_489_742_783_178;
const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeibullFit {
    /// Location and scale; coefficients are zero.
    pub params: ClusterParams,
    pub log_lik: f64,
    /// Gradient with respect to `(mu, zeta)` at the returned point.
    pub gradient: [f64; 2],
    pub iterations: usize,
}

/// Censored type-I minimum log-likelihood of the responses at `(mu, zeta)`,
/// ignoring covariates.
pub fn weibull_log_lik(data: &Dataset, mu: f64, zeta: f64) -> f64 {
    data.y()
        .iter()
        .zip(data.delta())
        .map(|(&y, &d)| KernelFamily::TypeIMinimum.censored_log_lik(y, d, mu, zeta))
        .sum()
}

/// Log-likelihood, gradient and Hessian in `(mu, s = ln zeta)`.
fn derivatives(data: &Dataset, mu: f64, s: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let zeta = s.exp();
    let c = RATE / zeta;
    let (mut g_mu, mut g_s) = (0.0, 0.0);
    let (mut h_mm, mut h_ms, mut h_ss) = (0.0, 0.0, 0.0);
    let mut d = 0.0;
    for (&y, &exact) in data.y().iter().zip(data.delta()) {
        let a = c * (y - mu);
        let ew = (a - EULER_GAMMA).exp();
        let delta = if exact { 1.0 } else { 0.0 };
        d += delta;
        let r = ew - delta;
        g_mu += c * r;
        g_s += a * r;
        h_mm -= c * c * ew;
        h_ms -= c * (r + a * ew);
        h_ss -= a * r + a * a * ew;
    }
    g_s -= d;
    let ll = weibull_log_lik(data, mu, zeta);
    (ll, [g_mu, g_s], [[h_mm, h_ms], [h_ms, h_ss]])
}

/// Maximum likelihood `(mu, zeta)` of the censored type-I minimum model
/// (Weibull on the time scale) by damped Newton iterations on
/// `(mu, ln zeta)`.
pub fn weibull_mle(data: &Dataset) -> Result<WeibullFit> {
    let exact: Vec<f64> = data.y().iter().zip(data.delta()).filter(|(_, d)| **d).map(|(y, _)| *y).collect();
    if exact.len() < 2 {
        return Err(Error::Domain(format!("need at least two exact observations, got {}", exact.len())));
    }
    let m = exact.iter().sum::<f64>() / exact.len() as f64;
    let sd = (exact.iter().map(|y| (y - m).powi(2)).sum::<f64>() / exact.len() as f64).sqrt();
    if !(sd > 1e-10 * (1.0 + m.abs())) {
        return Err(Error::Estimation("exact observations are identical: scale estimate collapses to zero".into()));
    }
    let (mut mu, mut s) = (m, sd.ln());
    let p = data.p();
    for iter in 0..=MAX_ITER {
        let (ll, g, h) = derivatives(data, mu, s);
        let zeta = s.exp();
        let grad = [g[0], g[1] / zeta];
        if grad[0].abs().max(grad[1].abs()) < GRAD_TOL {
            return Ok(WeibullFit {
                params: ClusterParams::new(mu, vec![0.0; p], zeta)?,
                log_lik: ll,
                gradient: grad,
                iterations: iter,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        let mut step = if h[0][0] < 0.0 && det > 0.0 {
            // -H^{-1} g
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[0][1] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            [g[0] * 1e-3, g[1] * 1e-3]
        };
        let mut t = 1.0;
        loop {
            let (nm, ns) = (mu + t * step[0], s + t * step[1]);
            let nll = weibull_log_lik(data, nm, ns.exp());
            if nll.is_finite() && nll >= ll - 1e-12 * ll.abs() {
                mu = nm;
                s = ns;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                step = [0.0, 0.0];
                break;
            }
        }
        if step == [0.0, 0.0] {
            break;
        }
        if !(s.exp() > 1e-10 * (1.0 + mu.abs())) || !mu.is_finite() {
            return Err(Error::Estimation("scale estimate collapsed to zero".into()));
        }
    }
    Err(Error::Estimation(format!("Newton iterations did not converge within {MAX_ITER} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::sample;
    use rand::Rng;

    fn draws(n: usize, mu: f64, zeta: f64, seed: u64) -> Dataset {
        let mut rng = crate::rng::derive_rng(seed, 0);
        let p = ClusterParams::new(mu, vec![], zeta).unwrap();
        let y: Vec<f64> = (0..n).map(|_| sample(KernelFamily::TypeIMinimum, &p, &[], &mut rng).unwrap()).collect();
        Dataset::from_flat(y, vec![true; n], vec![], 0).unwrap()
    }

    #[test]
    fn recovers_parameters() {
        let data = draws(500, 2.0, 0.12, 31);
        let fit = weibull_mle(&data).unwrap();
        assert!((fit.params.mu - 2.0).abs() < 0.05);
        assert!((fit.params.zeta - 0.12).abs() < 0.05);
        assert!(fit.gradient.iter().all(|g| g.abs() < 1e-8));
    }

    #[test]
    fn stationary_and_maximal() {
        let mut data = draws(80, 1.0, 0.3, 32);
        for i in (0..80).step_by(4) {
            let y = data.y()[i] - 0.1;
            data.set_observation(i, y, false);
        }
        let fit = weibull_mle(&data).unwrap();
        let (mu, z) = (fit.params.mu, fit.params.zeta);
        let h = 1e-6;
        let dmu = (weibull_log_lik(&data, mu + h, z) - weibull_log_lik(&data, mu - h, z)) / (2.0 * h);
        let dz = (weibull_log_lik(&data, mu, z + h) - weibull_log_lik(&data, mu, z - h)) / (2.0 * h);
        assert!(dmu.abs() < 1e-5 && dz.abs() < 1e-5, "{dmu} {dz}");
        let mut rng = crate::rng::derive_rng(33, 0);
        for _ in 0..100 {
            let m = mu + rng.random_range(-0.1..0.1);
            let s = z * rng.random_range(0.8..1.25);
            assert!(weibull_log_lik(&data, m, s) <= fit.log_lik);
        }
    }

    #[test]
    fn degenerate_samples() {
        let data = Dataset::from_flat(vec![1.5, 1.5], vec![true, true], vec![], 0).unwrap();
        assert!(matches!(weibull_mle(&data), Err(Error::Estimation(_))));
        let data = Dataset::from_flat(vec![1.5, 2.0], vec![true, false], vec![], 0).unwrap();
        assert!(matches!(weibull_mle(&data), Err(Error::Domain(_))));
    }
}
