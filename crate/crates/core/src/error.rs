use thiserror::Error;

use crate::trace::SolverTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Every sampled point had an infinite objective value.
    #[error("degenerate weights: every sample has infinite objective value")]
    DegenerateWeights,

    #[error("invalid objective value (NaN) at sample {0}")]
    InvalidObjectiveValue(usize),

    #[error("invalid probe point: objective is not finite at {0}")]
    InvalidProbePoint(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The iteration produced a non-finite iterate or one whose norm exceeded
    /// the divergence threshold. The trace holds every finite row recorded
    /// before the failure.
    #[error("divergence detected at iteration {iteration}")]
    Divergence { iteration: usize, trace: SolverTrace },

    #[error("singular value decomposition failed on non-finite input")]
    Svd,

    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
