//! Chain export and re-import.
//!
//! A chain directory holds `chain.csv` (`iter, k, u, tau, alpha,
//! theta_common_1..p, alloc_1..n`), `loglik.csv` (`iter, ll_1..ll_n`),
//! `clusters.json` (cluster parameters and mixing-measure state per draw)
//! and `meta.json` (model description, acceptance rates, proposal scales).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Chain, Draw, ModelVariant, StepSizes};
use crate::error::{io_err, Error, Result};
use crate::kernels::{ClusterParams, KernelFamily};
use crate::mixing::{BaseMeasure, MixingMeasure};

pub const CHAIN_FILE: &str = "chain.csv";
pub const LOGLIK_FILE: &str = "loglik.csv";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const META_FILE: &str = "meta.json";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    variant: ModelVariant,
    family: KernelFamily,
    base: BaseMeasure,
    n: usize,
    p: usize,
    draws: usize,
    accept_rates: BTreeMap<String, f64>,
    steps: StepSizes,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterRecord {
    iter: usize,
    measure: MixingMeasure,
    clusters: Vec<ClusterParams>,
}

pub fn write_chain(dir: &Path, chain: &Chain) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut w = csv::Writer::from_path(dir.join(CHAIN_FILE))?;
    let mut header = vec!["iter".to_string(), "k".into(), "u".into(), "tau".into(), "alpha".into()];
    let q = chain.draws.first().map_or(0, |d| d.theta_common.len());
    header.extend((1..=q).map(|l| format!("theta_common_{l}")));
    header.extend((1..=chain.n).map(|i| format!("alloc_{i}")));
    w.write_record(&header)?;
    for d in &chain.draws {
        let (alpha, tau) = match d.measure {
            MixingMeasure::Nig { alpha, tau } => (Some(alpha), Some(tau)),
            MixingMeasure::Dp { mass } => (Some(mass), None),
            MixingMeasure::Py { theta, .. } => (Some(theta), None),
        };
        let mut rec = vec![d.iter.to_string(), d.k().to_string(), fmt_opt(d.u), fmt_opt(tau), fmt_opt(alpha)];
        rec.extend(d.theta_common.iter().map(|t| fmt_f64(*t)));
        rec.extend(d.alloc.iter().map(|a| a.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(dir.join(CHAIN_FILE)))?;

    let mut w = csv::Writer::from_path(dir.join(LOGLIK_FILE))?;
    let mut header = vec!["iter".to_string()];
    header.extend((1..=chain.n).map(|i| format!("ll_{i}")));
    w.write_record(&header)?;
    for d in &chain.draws {
        let mut rec = vec![d.iter.to_string()];
        rec.extend(d.loglik.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(dir.join(LOGLIK_FILE)))?;

    let records: Vec<ClusterRecord> = chain
        .draws
        .iter()
        .map(|d| ClusterRecord { iter: d.iter, measure: d.measure, clusters: d.clusters.clone() })
        .collect();
    write_json(&dir.join(CLUSTERS_FILE), &records)?;

    let meta = Meta {
        variant: chain.variant,
        family: chain.family,
        base: chain.base.clone(),
        n: chain.n,
        p: chain.p,
        draws: chain.draws.len(),
        accept_rates: chain.accept_rates.clone(),
        steps: chain.steps,
    };
    write_json(&dir.join(META_FILE), &meta)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    fs::write(path, s + "\n").map_err(io_err(path))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&s)?)
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        lines: vec![(line, format!("`{s}`: {e}"))],
    })
}

fn parse_usize(s: &str, path: &Path, line: usize) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        lines: vec![(line, format!("`{s}`: {e}"))],
    })
}

pub fn read_chain(dir: &Path) -> Result<Chain> {
    let meta: Meta = read_json(&dir.join(META_FILE))?;
    let records: Vec<ClusterRecord> = read_json(&dir.join(CLUSTERS_FILE))?;

    let path = dir.join(CHAIN_FILE);
    let mut r = csv::Reader::from_path(&path)?;
    let q = r.headers()?.iter().filter(|h| h.starts_with("theta_common_")).count();
    let mut draws = Vec::with_capacity(meta.draws);
    for (row, (rec, cl)) in r.records().zip(records).enumerate() {
        let rec = rec?;
        let line = row + 2;
        let iter = parse_usize(&rec[0], &path, line)?;
        if iter != cl.iter {
            return Err(Error::Malformed {
                path: path.clone(),
                lines: vec![(line, format!("iteration {iter} does not match sidecar iteration {}", cl.iter))],
            });
        }
        let u = if rec[2].is_empty() { None } else { Some(parse_f64(&rec[2], &path, line)?) };
        let theta_common = (0..q).map(|l| parse_f64(&rec[5 + l], &path, line)).collect::<Result<Vec<_>>>()?;
        let alloc = (0..meta.n)
            .map(|i| parse_usize(&rec[5 + q + i], &path, line))
            .collect::<Result<Vec<_>>>()?;
        draws.push(Draw { iter, alloc, clusters: cl.clusters, u, measure: cl.measure, theta_common, loglik: vec![] });
    }

    let path = dir.join(LOGLIK_FILE);
    let mut r = csv::Reader::from_path(&path)?;
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let Some(d) = draws.get_mut(row) else { break };
        d.loglik = rec.iter().skip(1).map(|s| parse_f64(s, &path, row + 2)).collect::<Result<Vec<_>>>()?;
    }

    Ok(Chain {
        variant: meta.variant,
        family: meta.family,
        base: meta.base,
        n: meta.n,
        p: meta.p,
        draws,
        accept_rates: meta.accept_rates,
        steps: meta.steps,
    })
}
