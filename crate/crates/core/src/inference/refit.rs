use rayon::prelude::*;
use serde::Serialize;

use super::quantile_sorted;
use crate::error::{Error, Result};
use crate::kernels::{Dataset, KernelFamily};
use crate::mixing::MixingMeasure;
use crate::partitions::Partition;
use crate::sampler::{run, Chain, ModelVariant, SamplerConfig};

/// Posterior median and central interval of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    /// `mu`, `zeta` or `theta_<l>` (1-based).
    pub parameter: String,
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    /// The interval lies entirely on one side of zero.
    pub excludes_zero: bool,
}

impl ParameterSummary {
    pub fn from_samples(parameter: impl Into<String>, mut samples: Vec<f64>, level: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("no samples to summarize".into()));
        }
        samples.sort_by(f64::total_cmp);
        let lo = quantile_sorted(&samples, level / 2.0);
        let hi = quantile_sorted(&samples, 1.0 - level / 2.0);
        Ok(Self {
            parameter: parameter.into(),
            median: quantile_sorted(&samples, 0.5),
            lo,
            hi,
            excludes_zero: lo > 0.0 || hi < 0.0,
        })
    }
}

/// Summaries of `mu`, every coefficient and `zeta`, pooling across draws
/// the parameters attached to each observation. `level` is the total tail
/// mass left outside the interval.
pub fn summarize(chain: &Chain, level: f64) -> Result<Vec<ParameterSummary>> {
    if chain.is_empty() {
        return Err(Error::Domain("chain has no draws".into()));
    }
    let p = chain.p;
    let mut mu = Vec::new();
    let mut zeta = Vec::new();
    let mut theta = vec![Vec::new(); p];
    for d in &chain.draws {
        for &a in &d.alloc {
            let c = &d.clusters[a];
            mu.push(c.mu);
            zeta.push(c.zeta);
            for (l, t) in theta.iter_mut().enumerate() {
                t.push(match chain.variant {
                    ModelVariant::M0 => 0.0,
                    ModelVariant::M1 => d.theta_common[l],
                    ModelVariant::M2 => c.theta[l],
                });
            }
        }
    }
    let mut out = vec![ParameterSummary::from_samples("mu", mu, level)?];
    for (l, t) in theta.into_iter().enumerate() {
        out.push(ParameterSummary::from_samples(format!("theta_{}", l + 1), t, level)?);
    }
    out.push(ParameterSummary::from_samples("zeta", zeta, level)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumFit {
    /// 1-based block number in the partition.
    pub label: usize,
    /// Dataset rows of the stratum.
    pub rows: Vec<usize>,
    pub chain: Chain,
    pub summaries: Vec<ParameterSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refit {
    pub strata: Vec<StratumFit>,
    /// Labels of single-observation strata, which are not refitted.
    pub skipped: Vec<usize>,
}

/// Runs the sampler independently on every stratum with at least two
/// observations. Stratum `j` (0-based) uses random stream
/// `config.stream + j`, so a one-block partition reproduces a plain run.
pub fn stratum_refit(
    data: &Dataset,
    partition: &Partition,
    variant: ModelVariant,
    family: KernelFamily,
    measure: MixingMeasure,
    config: &SamplerConfig,
    level: f64,
) -> Result<Refit> {
    if partition.n() != data.n() {
        return Err(Error::Domain(format!(
            "partition covers {} observations, dataset has {}",
            partition.n(),
            data.n()
        )));
    }
    let blocks = partition.blocks();
    let mut skipped = Vec::new();
    let mut work = Vec::new();
    for (j, rows) in blocks.into_iter().enumerate() {
        if rows.len() < 2 {
            log::info!("stratum {} has a single observation and is not refitted", j + 1);
            skipped.push(j + 1);
        } else {
            work.push((j, rows));
        }
    }
    let strata = work
        .into_par_iter()
        .map(|(j, rows)| {
            let sub = data.subset(&rows);
            let cfg = SamplerConfig { stream: config.stream.wrapping_add(j as u64), ..config.clone() };
            let chain = run(&sub, variant, family, measure, &cfg)?;
            let summaries = summarize(&chain, level)?;
            Ok(StratumFit { label: j + 1, rows, chain, summaries })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Refit { strata, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excludes_zero_flag() {
        let s = ParameterSummary { parameter: "theta_1".into(), median: -0.4, lo: -0.572, hi: -0.250, excludes_zero: true };
        let r = ParameterSummary::from_samples("theta_1", vec![s.lo, s.median, s.hi], 0.0).unwrap();
        assert!(r.excludes_zero);
        let r = ParameterSummary::from_samples("theta_2", vec![-0.045, 0.01, 0.057], 0.0).unwrap();
        assert!(!r.excludes_zero);
        assert_eq!((r.lo, r.median, r.hi), (-0.045, 0.01, 0.057));
    }

    #[test]
    fn one_block_matches_plain_run_and_singletons_skip() {
        let y = vec![0.1, 0.5, 0.9, 1.3, 1.1, 0.2, 0.7];
        let data = Dataset::from_flat(y, vec![true, true, false, true, true, false, true], vec![], 0).unwrap();
        let cfg = SamplerConfig { iters: 80, burnin: 40, seed: 5, ..SamplerConfig::default() };
        let m = MixingMeasure::Nig { alpha: 1.0, tau: 1.0 };
        let one = Partition::from_labels(&[0; 7]);
        let refit = stratum_refit(&data, &one, ModelVariant::M0, KernelFamily::Logistic, m, &cfg, 0.05).unwrap();
        let plain = run(&data, ModelVariant::M0, KernelFamily::Logistic, m, &cfg).unwrap();
        assert_eq!(refit.strata[0].chain, plain);
        assert_eq!(refit.strata[0].summaries.len(), 2);

        let p = Partition::from_labels(&[0, 0, 1, 2, 2, 2, 0]);
        let refit = stratum_refit(&data, &p, ModelVariant::M0, KernelFamily::Logistic, m, &cfg, 0.05).unwrap();
        assert_eq!(refit.skipped, vec![2]);
        assert_eq!(refit.strata.iter().map(|s| s.label).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(refit.strata[1].rows, vec![3, 4, 5]);

        let censored = Dataset::from_flat(vec![0.3, 0.8], vec![false, false], vec![], 0).unwrap();
        let two = Partition::from_labels(&[0, 0]);
        assert!(stratum_refit(&censored, &two, ModelVariant::M0, KernelFamily::Normal, m, &cfg, 0.05).is_ok());
        assert!(stratum_refit(&data, &two, ModelVariant::M0, KernelFamily::Normal, m, &cfg, 0.05).is_err());
    }
}
