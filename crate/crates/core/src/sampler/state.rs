use serde::{Deserialize, Serialize};

use super::{LikelihoodMode, ModelVariant};
use crate::error::{Error, Result};
use crate::kernels::{dot, ClusterParams, Dataset, KernelFamily};
use crate::mixing::{BaseMeasure, MixingMeasure};

/// Fixed ingredients of one sampler run.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    pub data: &'a Dataset,
    pub variant: ModelVariant,
    pub family: KernelFamily,
    pub base: BaseMeasure,
    pub likelihood: LikelihoodMode,
    /// Covariate standard deviations, used to scale coefficient proposals.
    pub(crate) covariate_sd: Vec<f64>,
}

impl<'a> Model<'a> {
    pub fn new(
        data: &'a Dataset,
        variant: ModelVariant,
        family: KernelFamily,
        base: BaseMeasure,
        likelihood: LikelihoodMode,
    ) -> Self {
        let covariate_sd = (0..data.p())
            .map(|l| {
                let sd = data.covariate_sd(l);
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { data, variant, family, base, likelihood, covariate_sd }
    }

    /// Censored log-likelihood of observation `i` under `params`.
    #[inline]
    pub fn obs_log_lik(&self, i: usize, params: &ClusterParams, theta_common: &[f64]) -> f64 {
        if self.likelihood == LikelihoodMode::Unit {
            return 0.0;
        }
        let x = self.data.x(i);
        let location = match self.variant {
            ModelVariant::M0 => params.mu,
            ModelVariant::M1 => params.mu - dot(theta_common, x),
            ModelVariant::M2 => params.mu - dot(&params.theta, x),
        };
        self.family
            .censored_log_lik(self.data.y()[i], self.data.delta()[i], location, params.zeta)
    }

    /// Parameters in kernel form (coefficients filled in for the common
    /// model, zeros for the null model).
    pub fn effective_params(&self, params: &ClusterParams, theta_common: &[f64]) -> ClusterParams {
        let theta = match self.variant {
            ModelVariant::M0 => vec![0.0; self.data.p()],
            ModelVariant::M1 => theta_common.to_vec(),
            ModelVariant::M2 => params.theta.clone(),
        };
        ClusterParams { mu: params.mu, theta, zeta: params.zeta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub params: ClusterParams,
    pub size: usize,
}

/// Current values of every quantity the sampler updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    /// Cluster label of each observation, compact in `0..k`.
    pub alloc: Vec<usize>,
    pub clusters: Vec<Cluster>,
    /// Auxiliary variable of the N-IG representation (unused otherwise).
    pub u: f64,
    /// Mixing measure at the current `alpha` and `tau`.
    pub measure: MixingMeasure,
    /// Shared coefficients (model M1 only; empty otherwise).
    pub theta_common: Vec<f64>,
}

impl SamplerState {
    /// Every observation in one cluster with parameters `params`.
    pub fn single_cluster(n: usize, params: ClusterParams, u: f64, measure: MixingMeasure, theta_common: Vec<f64>) -> Self {
        Self {
            alloc: vec![0; n],
            clusters: vec![Cluster { params, size: n }],
            u,
            measure,
            theta_common,
        }
    }

    pub fn n(&self) -> usize {
        self.alloc.len()
    }

    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.size).collect()
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.measure {
            MixingMeasure::Nig { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match self.measure {
            MixingMeasure::Nig { tau, .. } => Some(tau),
            _ => None,
        }
    }

    /// Observation indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m: Vec<Vec<usize>> = self.clusters.iter().map(|c| Vec::with_capacity(c.size)).collect();
        for (i, &c) in self.alloc.iter().enumerate() {
            m[c].push(i);
        }
        m
    }

    /// Removes cluster `j` (which must be empty of observations) and
    /// relabels the last cluster into its slot.
    pub(crate) fn remove_cluster(&mut self, j: usize) -> Cluster {
        let last = self.clusters.len() - 1;
        let removed = self.clusters.swap_remove(j);
        if j != last {
            for a in self.alloc.iter_mut() {
                if *a == last {
                    *a = j;
                }
            }
        }
        removed
    }

    pub fn check_invariants(&self) -> Result<()> {
        let k = self.clusters.len();
        let mut counts = vec![0usize; k];
        for &a in &self.alloc {
            if a >= k {
                return Err(Error::Domain(format!("label {a} out of range 0..{k}")));
            }
            counts[a] += 1;
        }
        for (j, c) in self.clusters.iter().enumerate() {
            if c.size == 0 || c.size != counts[j] {
                return Err(Error::Domain(format!("cluster {j} size {} but {} members", c.size, counts[j])));
            }
            c.params.validate()?;
        }
        if !(self.u > 0.0) && self.measure.is_nig() {
            return Err(Error::Domain("u must be positive".into()));
        }
        self.measure.validate()
    }
}
