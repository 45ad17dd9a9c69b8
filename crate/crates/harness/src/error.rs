use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A schema or validation failure; `key` is the path of the offending
    /// entry, e.g. `methods[1].step_sizes`.
    #[error("{key}: {message}")]
    Config { key: String, message: String },

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },

    #[error("{method} at step size {step_size:e}, seed {seed}: {source}")]
    Cell { method: String, step_size: f64, seed: u64, source: viopt_core::Error },

    #[error(transparent)]
    Core(#[from] viopt_core::Error),

    #[error("no records to select from")]
    EmptyGrid,

    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),
}

impl HarnessError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config { key: key.into(), message: message.into() }
    }
}
