use alloc::string::String;

/// Errors raised by the detectors, simulators and metrics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("grid point {0} lies outside the source grid span")]
    Extrapolation(f64),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid contamination spec: {0}")]
    Spec(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
