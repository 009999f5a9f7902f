use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at grid point {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("value {value} at grid point {index} lies outside the admissible range |s| <= {bound}")]
    DomainViolation { index: usize, value: f64, bound: f64 },

    #[error("resolvent did not converge for s = {s}, lambda = {lambda} (residual {residual:e})")]
    ResolventDiverged { s: f64, lambda: f64, residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input must have zero mean, found mean {mean:e}")]
    NonZeroMean { mean: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step {step} failed: {source}")]
    Step {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
