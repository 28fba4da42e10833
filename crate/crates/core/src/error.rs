use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input domain error: {0}")]
    Domain(String),

    #[error("operation `{op}` is not defined for the {measure} mixing measure")]
    UnsupportedMeasure { op: &'static str, measure: &'static str },

    #[error("n = {n} exceeds the enumeration limit {limit}")]
    OracleScale { n: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("malformed input in {path}: {}", format_lines(.lines))]
    Malformed { path: PathBuf, lines: Vec<(usize, String)> },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_lines(lines: &[(usize, String)]) -> String {
    lines
        .iter()
        .map(|(l, m)| format!("line {l}: {m}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
