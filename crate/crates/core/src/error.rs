use thiserror::Error;

use crate::meanfield::PicardRecord;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("spliced paths differ by {gap:e} at s = {at} (tolerance {tol:e})")]
    Discontinuity { at: f64, gap: f64, tol: f64 },

    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration diverged at step {step} (t = {time}): {reason}")]
    Divergence {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("Picard iteration did not converge within {iterations} iterations (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        trace: Vec<PicardRecord>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
