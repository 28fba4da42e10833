//! Survival data files: `time,status,x1..xp`, status 1 = exact event,
//! status 0 = right-censored.

use std::fs;
use std::path::Path;

use crate::error::{io_err, Error, Result};
use crate::kernels::Dataset;
use crate::sampler::io::fmt_f64;

/// Survival records on the time scale, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable {
    pub time: Vec<f64>,
    /// `true` for an observed event.
    pub status: Vec<bool>,
    /// Row-major covariates.
    pub x: Vec<f64>,
    pub covariates: Vec<String>,
}

impl SurvivalTable {
    pub fn n(&self) -> usize {
        self.time.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.len()
    }

    /// Log times, optionally with covariates shifted to zero mean.
    pub fn to_dataset(&self, center: bool) -> Result<Dataset> {
        let y = self.time.iter().map(|t| t.ln()).collect();
        let d = Dataset::from_flat(y, self.status.clone(), self.x.clone(), self.p())?;
        Ok(if center { d.centered() } else { d })
    }

    /// Time-scale table of a log-time dataset.
    pub fn from_dataset(data: &Dataset) -> Self {
        let p = data.p();
        Self {
            time: data.y().iter().map(|y| y.exp()).collect(),
            status: data.delta().to_vec(),
            x: (0..data.n()).flat_map(|i| data.x(i).to_vec()).collect(),
            covariates: (1..=p).map(|l| format!("x{l}")).collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "time" || &header[1] != "status" {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                lines: vec![(1, "header must start with `time,status`".into())],
            });
        }
        let covariates: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let width = header.len();
        let mut table = SurvivalTable { time: vec![], status: vec![], x: vec![], covariates };
        let mut bad = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != width {
                bad.push((line, format!("expected {width} fields, found {}", rec.len())));
                continue;
            }
            let time = match rec[0].parse::<f64>() {
                Ok(t) if t > 0.0 && t.is_finite() => t,
                Ok(t) => {
                    bad.push((line, format!("time must be positive and finite, got {t}")));
                    continue;
                }
                Err(_) => {
                    bad.push((line, format!("time `{}` is not a number", &rec[0])));
                    continue;
                }
            };
            let status = match &rec[1] {
                "1" => true,
                "0" => false,
                other => {
                    bad.push((line, format!("status must be 0 or 1, got `{other}`")));
                    continue;
                }
            };
            let xs: std::result::Result<Vec<f64>, _> = rec.iter().skip(2).map(str::parse::<f64>).collect();
            match xs {
                Ok(xs) if xs.iter().all(|v| v.is_finite()) => {
                    table.time.push(time);
                    table.status.push(status);
                    table.x.extend(xs);
                }
                _ => bad.push((line, "covariates must be finite numbers".into())),
            }
        }
        if !bad.is_empty() {
            return Err(Error::Malformed { path: path.to_path_buf(), lines: bad });
        }
        if table.time.is_empty() {
            return Err(Error::Malformed { path: path.to_path_buf(), lines: vec![(1, "no data rows".into())] });
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["time".to_string(), "status".to_string()];
        header.extend(self.covariates.iter().cloned());
        w.write_record(&header)?;
        let p = self.p();
        for i in 0..self.n() {
            let mut rec = vec![fmt_f64(self.time[i]), if self.status[i] { "1" } else { "0" }.to_string()];
            rec.extend(self.x[i * p..(i + 1) * p].iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err(path))
    }
}
