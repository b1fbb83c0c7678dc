use std::io;

use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the CLI exit-code classes: argument problems,
/// I/O and format problems, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix of size {size} exceeds the dense limit of {limit} points; use the structured (circulant/Kronecker) paths")]
    DenseLimit { size: usize, limit: usize },

    #[error("kernel is not positive semi-definite: eigenvalue {min_eigenvalue:e} below tolerance (max {max_eigenvalue:e})")]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("power iteration did not converge after {iterations} iterations (last relative change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("training diverged at epoch {epoch} (loss {loss:e})")]
    Diverged {
        epoch: usize,
        loss: f64,
        report: Box<crate::train::TrainReport>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
