use thiserror::Error;

/// Errors raised anywhere in the benchmark pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph contains a directed cycle")]
    CyclicGraph,
    #[error("learner produced a cyclic graph after pruning")]
    CyclicResult,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("column {column} has (near-)zero standard deviation")]
    DegenerateColumn { column: usize },
    #[error("metric component {name} = {value} lies outside [0, 1]")]
    InvalidMetric { name: &'static str, value: f64 },
    #[error("undefined value: {0}")]
    Undefined(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
