use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModelVariant, StepSizes};
use crate::kernels::{ClusterParams, KernelFamily};
use crate::mixing::{BaseMeasure, MixingMeasure};
use crate::partitions::Partition;

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iter: usize,
    pub alloc: Vec<usize>,
    pub clusters: Vec<ClusterParams>,
    /// N-IG auxiliary variable; `None` for other measures.
    pub u: Option<f64>,
    pub measure: MixingMeasure,
    pub theta_common: Vec<f64>,
    /// Per-observation censored log-likelihood at this draw (empty when not
    /// recorded).
    pub loglik: Vec<f64>,
}

impl Draw {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.clusters.len()];
        for &a in &self.alloc {
            s[a] += 1;
        }
        s
    }

    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.alloc)
    }
}

/// Output of one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub variant: ModelVariant,
    pub family: KernelFamily,
    pub base: BaseMeasure,
    pub n: usize,
    pub p: usize,
    pub draws: Vec<Draw>,
    /// Post-burn-in acceptance rate of every Metropolis update.
    pub accept_rates: BTreeMap<String, f64>,
    /// Proposal scales in force after burn-in.
    pub steps: StepSizes,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn partitions(&self) -> Vec<Partition> {
        self.draws.iter().map(Draw::partition).collect()
    }

    pub fn k_series(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.k() as f64).collect()
    }

    /// Per-observation log-likelihoods, one row per draw.
    pub fn loglik(&self) -> Vec<&[f64]> {
        self.draws.iter().map(|d| d.loglik.as_slice()).collect()
    }
}
