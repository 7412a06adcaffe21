use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("filter design failed: {0}")]
    Design(String),

    #[error("sparseness is undefined for an all-zero vector")]
    ZeroVector,

    #[error("could not tune system to sparseness {target} (best {achieved:.4} after {iterations} iterations)")]
    SparsenessTuning {
        target: f64,
        achieved: f64,
        iterations: usize,
    },

    #[error("adaptive filter diverged at decimated iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("all {runs} trials diverged")]
    AllTrialsDiverged { runs: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
