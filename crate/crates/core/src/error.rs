//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space too large: {size} states exceeds guard {guard}")]
    StateSpaceTooLarge { size: u128, guard: u64 },

    #[error("ground-state sign pattern is degenerate")]
    DegenerateGroundState,

    #[error("error probability is not monotone decreasing over the bracket")]
    NonMonotoneBracket,

    #[error("target error probability unreachable: {0}")]
    TargetUnreachable(String),

    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("total transition rate is zero (absorbing state)")]
    AbsorbingState,

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("probability {0} below negativity tolerance")]
    NegativeProbability(f64),

    #[error("not converged by end of trajectory")]
    NotConverged,

    #[error("graph parse error at line {line}: {msg}")]
    GraphParse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
