use thiserror::Error;

/// Errors produced by model construction, planning, estimation and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("policy set difference is empty")]
    EmptyDifference,
    #[error("too many policies: {count} exceeds limit {limit}")]
    TooManyPolicies { count: String, limit: u64 },
    #[error("degenerate window: {0}")]
    DegenerateWindow(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
