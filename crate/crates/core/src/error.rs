//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not unitary (deviation {deviation:.3e} exceeds tolerance {tol:.3e})")]
    NonUnitary { deviation: f64, tol: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matrix norm below cutoff; fidelity undefined")]
    ZeroMatrix,

    #[error("unsupported qubit count {0} (supported: {1})")]
    UnsupportedSize(usize, &'static str),

    #[error("invalid subsystem pair: {0}")]
    InvalidPair(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("constraint data lies outside the range of the trace-preservation block")]
    FactorizationFailure,

    #[error("problem is infeasible: attainable data residual {attainable:.3e} exceeds epsilon {epsilon:.3e}")]
    Infeasible { attainable: f64, epsilon: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown gate: {0}")]
    UnknownGate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
