use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: configuration has {config} sites, disorder has {disorder}")]
    DimensionMismatch { config: usize, disorder: usize },

    #[error("site index {site} out of range for n = {n}")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("n = {n} exceeds the enumeration cap of {cap}; use a heuristic solver or raise the cap")]
    Capacity { n: usize, cap: usize },

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integrity failure in {what}: {detail}")]
    Integrity { what: String, detail: String },

    #[error("statistics key mismatch: {0}")]
    KeyMismatch(String),

    #[error("unit {sample_index} (seed {seed:#018x}) failed: {message}")]
    UnitFailed {
        sample_index: u64,
        seed: u64,
        message: String,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
