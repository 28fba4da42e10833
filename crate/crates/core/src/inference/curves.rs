use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quantile_sorted;
use crate::error::{Error, Result};
use crate::kernels::ClusterParams;
use crate::sampler::{Chain, ModelVariant};

/// Posterior predictive survival on a time grid with a pointwise band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub t_grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Band level `a`: the band spans the `a/2` and `1 - a/2` quantiles.
    pub level: f64,
    /// Base-measure draws averaged for the new-cluster term of each draw.
    pub new_cluster_draws: usize,
    /// Drop the new-cluster term and renormalize over occupied clusters.
    pub include_new: bool,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { level: 0.05, new_cluster_draws: 25, include_new: true }
    }
}

/// Evaluates the predictive survival of a new subject with covariates `x0`
/// at each time of `t_grid`, for every retained draw; returns the
/// across-draw mean and pointwise quantile band.
pub fn predictive_survival<R: Rng + ?Sized>(
    chain: &Chain,
    t_grid: &[f64],
    x0: &[f64],
    options: &CurveOptions,
    rng: &mut R,
) -> Result<SurvivalCurve> {
    if chain.is_empty() {
        return Err(Error::Domain("chain has no draws".into()));
    }
    if t_grid.is_empty() {
        return Err(Error::Domain("time grid is empty".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::Domain(format!("grid times must be positive and finite, got {t}")));
    }
    if !(options.level > 0.0 && options.level < 1.0) {
        return Err(Error::Domain(format!("band level must lie in (0, 1), got {}", options.level)));
    }
    if x0.len() != chain.p && chain.variant != ModelVariant::M0 {
        return Err(Error::Domain(format!("x0 has {} entries, chain has {} covariates", x0.len(), chain.p)));
    }
    let family = chain.family;
    let log_t: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let location = |p: &ClusterParams, theta_common: &[f64]| -> f64 {
        match chain.variant {
            ModelVariant::M0 => p.mu,
            ModelVariant::M1 => p.mu - crate::kernels::dot(theta_common, x0),
            ModelVariant::M2 => p.mu - crate::kernels::dot(&p.theta, x0),
        }
    };
    let surv = |loc: f64, zeta: f64, y: f64| family.std_log_survival((y - loc) / zeta).exp();

    let g = t_grid.len();
    let mut per_draw: Vec<Vec<f64>> = vec![Vec::with_capacity(chain.len()); g];
    for d in &chain.draws {
        let sizes = d.sizes();
        let w = d.measure.predictive_weights(&sizes, d.u.unwrap_or(0.0), 1)?;
        let new_w = if options.include_new && options.new_cluster_draws > 0 { w.new_per_aux } else { 0.0 };
        let total: f64 = w.existing.iter().sum::<f64>() + new_w;
        let mut s = vec![0.0; g];
        for (c, wj) in d.clusters.iter().zip(&w.existing) {
            let loc = location(c, &d.theta_common);
            for (sk, y) in s.iter_mut().zip(&log_t) {
                *sk += wj / total * surv(loc, c.zeta, *y);
            }
        }
        if new_w > 0.0 {
            let m = options.new_cluster_draws;
            let scale = new_w / total / m as f64;
            for _ in 0..m {
                let c = chain.base.sample(rng);
                let loc = location(&c, &d.theta_common);
                for (sk, y) in s.iter_mut().zip(&log_t) {
                    *sk += scale * surv(loc, c.zeta, *y);
                }
            }
        }
        for (col, v) in per_draw.iter_mut().zip(s) {
            col.push(v.clamp(0.0, 1.0));
        }
    }

    let mut curve = SurvivalCurve { t_grid: t_grid.to_vec(), mean: vec![], lo: vec![], hi: vec![] };
    for mut col in per_draw {
        curve.mean.push(col.iter().sum::<f64>() / col.len() as f64);
        col.sort_by(f64::total_cmp);
        curve.lo.push(quantile_sorted(&col, options.level / 2.0));
        curve.hi.push(quantile_sorted(&col, 1.0 - options.level / 2.0));
    }
    for k in 0..g {
        // pointwise quantiles can sit a rounding error outside the mean
        curve.lo[k] = curve.lo[k].min(curve.mean[k]);
        curve.hi[k] = curve.hi[k].max(curve.mean[k]);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{log_survival, Dataset, KernelFamily};
    use crate::mixing::MixingMeasure;
    use crate::sampler::{run, SamplerConfig};

    fn fixture() -> (Dataset, Chain) {
        let mut rng = crate::rng::derive_rng(41, 0);
        let mut y = vec![];
        let mut x = vec![];
        for i in 0..60 {
            let xi = rng.random_range(-1.0..1.0);
            let mu = if i % 2 == 0 { 1.0 } else { 2.5 };
            y.push(mu - 0.5 * xi + 0.2 * KernelFamily::TypeIMinimum.std_sample(&mut rng));
            x.push(xi);
        }
        let data = Dataset::from_flat(y, vec![true; 60], x, 1).unwrap();
        let config = SamplerConfig { iters: 400, burnin: 200, seed: 41, ..SamplerConfig::default() };
        let chain = run(
            &data,
            ModelVariant::M2,
            KernelFamily::TypeIMinimum,
            MixingMeasure::Nig { alpha: 1.0, tau: 1.0 },
            &config,
        )
        .unwrap();
        (data, chain)
    }

    #[test]
    fn monotone_bounded_and_ordered() {
        let (_, chain) = fixture();
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.25).collect();
        let mut rng = crate::rng::derive_rng(42, 0);
        let c = predictive_survival(&chain, &grid, &[0.3], &CurveOptions::default(), &mut rng).unwrap();
        for k in 0..grid.len() {
            assert!(0.0 <= c.lo[k] && c.lo[k] <= c.mean[k] && c.mean[k] <= c.hi[k] && c.hi[k] <= 1.0);
            if k > 0 {
                assert!(c.mean[k] <= c.mean[k - 1] + 1e-12);
                assert!(c.lo[k] <= c.lo[k - 1] + 1e-12);
                assert!(c.hi[k] <= c.hi[k - 1] + 1e-12);
            }
        }
        let c = predictive_survival(&chain, &[1e-9], &[0.3], &CurveOptions::default(), &mut rng).unwrap();
        assert!((c.mean[0] - 1.0).abs() < 1e-6 && (c.lo[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_cluster_without_new_mass_is_exact() {
        let (_, mut chain) = fixture();
        chain.draws.truncate(1);
        let d = &mut chain.draws[0];
        let n = d.alloc.len();
        d.alloc = vec![0; n];
        d.clusters.truncate(1);
        let params = d.clusters[0].clone();
        let opts = CurveOptions { include_new: false, ..CurveOptions::default() };
        let grid = [0.5, 1.0, 3.0, 8.0];
        let mut rng = crate::rng::derive_rng(43, 0);
        let c = predictive_survival(&chain, &grid, &[0.7], &opts, &mut rng).unwrap();
        for (k, t) in grid.iter().enumerate() {
            let exact = log_survival(KernelFamily::TypeIMinimum, t.ln(), &[0.7], &params).unwrap().exp();
            assert_eq!(c.mean[k], exact);
            assert_eq!(c.lo[k], exact);
            assert_eq!(c.hi[k], exact);
        }
    }

    #[test]
    fn input_errors() {
        let (_, chain) = fixture();
        let mut rng = crate::rng::derive_rng(44, 0);
        let o = CurveOptions::default();
        assert!(predictive_survival(&chain, &[], &[0.0], &o, &mut rng).is_err());
        assert!(predictive_survival(&chain, &[0.0], &[0.0], &o, &mut rng).is_err());
        assert!(predictive_survival(&chain, &[1.0], &[], &o, &mut rng).is_err());
        let bad = CurveOptions { level: 1.0, ..o };
        assert!(predictive_survival(&chain, &[1.0], &[0.0], &bad, &mut rng).is_err());
    }
}
