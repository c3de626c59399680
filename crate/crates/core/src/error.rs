use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SumsetError {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
    #[error("group of size {size} exceeds the configured cap {cap}")]
    SizeLimit { size: u128, cap: usize },
    #[error("sets belong to different groups ({left} vs {right})")]
    GroupMismatch { left: String, right: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not a subgroup: {0}")]
    NotSubgroup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("conclusion failed on valid input: {0}")]
    Anomaly(String),
}

pub type Result<T> = std::result::Result<T, SumsetError>;
