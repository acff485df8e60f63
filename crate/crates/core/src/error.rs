use thiserror::Error;

/// Errors produced anywhere in the charting pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("forecast covariance is not yet positive definite (t = {t})")]
    CovarianceNotReady { t: usize },

    #[error("Bayes factor overflows f64 (log value {0}); use the log Bayes factor")]
    Overflow(f64),

    #[error("series too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("fitted AR(1) is not stationary (phi = {0})")]
    NonStationary(f64),

    #[error("empty input")]
    EmptyInput,

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("target ARL {target} is not attainable for c in [{lo}, {hi}]")]
    BracketFailure { target: f64, lo: f64, hi: f64 },

    #[error("no discount factor produced a positive definite covariance estimate")]
    DegenerateFit,

    #[error("schema mismatch: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
