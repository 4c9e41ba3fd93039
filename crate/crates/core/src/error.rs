use thiserror::Error;

/// Errors produced by the forecasting library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample index {index} out of range (valid {min}..={max})")]
    IndexOutOfRange { index: usize, min: usize, max: usize },
    #[error("lag count must be at least 1, got {0}")]
    InvalidLagCount(usize),
    #[error("hour-of-day phase must be in 1..=24, got {0}")]
    InvalidPhase(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("insufficient context: need {needed} samples, got {available}")]
    InsufficientContext { needed: usize, available: usize },
    #[error("mean magnitude {0:e} is too close to zero")]
    DegenerateMean(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("invalid seasonal profile: {0}")]
    InvalidProfile(String),
    #[error("series is constant (zero variance)")]
    ConstantSeries,
    #[error("lag {max_lag} too large for a series of length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("Durbin-Levinson recursion broke down at lag {0}")]
    NumericalBreakdown(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("damped normal equations are not positive definite")]
    SingularSystem,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("series too short: {0} samples")]
    TooShort(usize),
    #[error("malformed parameter blob: {0}")]
    Decode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
