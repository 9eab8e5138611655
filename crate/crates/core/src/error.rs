use thiserror::Error;

/// Errors raised by model construction, spectral analysis, optimization and
/// simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph not connected")]
    NotConnected,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("stationary distribution not unique ({closed_classes} closed classes)")]
    StationaryNotUnique { closed_classes: usize },

    #[error("matrix is not Metzler: entry ({row}, {col}) = {value}")]
    NotMetzler { row: usize, col: usize, value: f64 },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("geometric program infeasible (phase-I optimum {phase1_value:.3e})")]
    Infeasible { phase1_value: f64 },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
