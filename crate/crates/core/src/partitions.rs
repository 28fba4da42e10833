//! Partitions of `0..n`, variation-of-information loss, RAND index and the
//! sample-restricted optimal partition.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{io_err, Error, Result};

/// Block labels in first-occurrence order, so two partitions compare equal
/// exactly when they group the observations the same way.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Canonicalises arbitrary labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = HashMap::new();
        let labels = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    /// Builds a partition from its blocks, each a list of indices.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (j, b) in blocks.iter().enumerate() {
            for &i in b {
                if i >= n || labels[i] != usize::MAX {
                    return Err(Error::Domain(format!("index {i} is out of range or in two blocks")));
                }
                labels[i] = j;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::Domain("blocks do not cover every index".into()));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Member indices of each block.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut b = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            b[l].push(i);
        }
        b
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["obs_id", "stratum_label"])?;
        for (i, l) in self.labels.iter().enumerate() {
            w.write_record([(i + 1).to_string(), (l + 1).to_string()])?;
        }
        w.flush().map_err(io_err(path))
    }

    /// Reads `obs_id, stratum_label` rows; ids are 1-based and must cover
    /// `1..=n` in order.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut labels = Vec::new();
        let mut bad = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let line = row + 2;
            let rec = match rec {
                Ok(rec) => rec,
                Err(e) => {
                    bad.push((line, e.to_string()));
                    continue;
                }
            };
            let id = rec.get(0).and_then(|s| s.trim().parse::<usize>().ok());
            let label = rec.get(1).and_then(|s| s.trim().parse::<usize>().ok());
            match (id, label) {
                (Some(id), Some(l)) if id == row + 1 => labels.push(l),
                _ => bad.push((line, "expected `obs_id,stratum_label` with consecutive ids".into())),
            }
        }
        if !bad.is_empty() {
            return Err(Error::Malformed { path: path.to_path_buf(), lines: bad });
        }
        Ok(Self::from_labels(&labels))
    }
}

fn check_same_n(a: &Partition, b: &Partition) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::Domain(format!("partitions over {} and {} observations", a.n(), b.n())));
    }
    Ok(())
}

fn plogp_sum(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    let mut counts: Vec<usize> = counts.filter(|&c| c > 0).collect();
    counts.sort_unstable();
    counts
        .into_iter()
        .map(|c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

/// Variation of information `H(a) + H(b) - 2 I(a, b)` in nats.
pub fn vi_distance(a: &Partition, b: &Partition) -> Result<f64> {
    check_same_n(a, b)?;
    let n = a.n();
    if n == 0 || a == b {
        return Ok(0.0);
    }
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        *joint.entry((x, y)).or_default() += 1;
    }
    let nf = n as f64;
    let ha = -plogp_sum(a.sizes().into_iter(), nf);
    let hb = -plogp_sum(b.sizes().into_iter(), nf);
    let hab = -plogp_sum(joint.into_values(), nf);
    Ok((2.0 * hab - (ha + hb)).max(0.0))
}

/// Fraction of pairs on which the two partitions agree.
pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    check_same_n(a, b)?;
    let n = a.n();
    if n < 2 {
        return Err(Error::Domain("rand index needs at least two observations".into()));
    }
    let pairs = |c: usize| (c * c.saturating_sub(1) / 2) as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        *joint.entry((x, y)).or_default() += 1;
    }
    let both: f64 = joint.values().map(|&c| pairs(c)).sum::<f64>();
    let in_a: f64 = a.sizes().into_iter().map(pairs).sum();
    let in_b: f64 = b.sizes().into_iter().map(pairs).sum();
    let total = pairs(n);
    // agreements = together in both + apart in both
    Ok((total + 2.0 * both - in_a - in_b) / total)
}

/// Monte Carlo posterior expected VI loss of `candidate`.
pub fn expected_loss(candidate: &Partition, samples: &[Partition]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("no partition samples".into()));
    }
    let mut s = 0.0;
    for p in samples {
        s += vi_distance(candidate, p)?;
    }
    Ok(s / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPartition {
    pub partition: Partition,
    pub expected_loss: f64,
    /// Index of the first sample equal to the chosen partition.
    pub index: usize,
}

/// The sampled partition with the smallest expected VI loss. Ties go to
/// fewer blocks, then to the earliest sample.
pub fn optimal_partition(samples: &[Partition]) -> Result<OptimalPartition> {
    let Some(first) = samples.first() else {
        return Err(Error::Domain("no partition samples".into()));
    };
    if let Some(p) = samples.iter().find(|p| p.n() != first.n()) {
        return Err(Error::Domain(format!("partitions over {} and {} observations", first.n(), p.n())));
    }

    // distinct partitions with multiplicities, in order of first appearance
    let mut index: HashMap<&Partition, usize> = HashMap::new();
    let mut distinct: Vec<(usize, usize)> = Vec::new();
    for (s, p) in samples.iter().enumerate() {
        match index.get(p) {
            Some(&d) => distinct[d].1 += 1,
            None => {
                index.insert(p, distinct.len());
                distinct.push((s, 1));
            }
        }
    }

    let m = samples.len() as f64;
    let losses: Vec<f64> = distinct
        .par_iter()
        .map(|&(s, _)| {
            let cand = &samples[s];
            distinct
                .iter()
                .map(|&(t, w)| w as f64 * vi_distance(cand, &samples[t]).unwrap_or(0.0))
                .sum::<f64>()
                / m
        })
        .collect();

    let mut best = 0;
    for d in 1..distinct.len() {
        let (l, bl) = (losses[d], losses[best]);
        let k = samples[distinct[d].0].k();
        let bk = samples[distinct[best].0].k();
        let tie = (l - bl).abs() <= 1e-12 * bl.max(1.0);
        if (l < bl && !tie) || (tie && k < bk) {
            best = d;
        }
    }
    let s = distinct[best].0;
    Ok(OptimalPartition { partition: samples[s].clone(), expected_loss: losses[best], index: s })
}
