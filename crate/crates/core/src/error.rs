use thiserror::Error;

/// Every failure mode of the lab. Variants line up with the CLI exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    /// The finite prefix is too short to decide the question asked of it.
    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),

    #[error("domain size {size} is not a block minimum of the prefix")]
    NotACut { size: usize },

    #[error("budget exceeded: {needed} exceeds cap {cap}")]
    Budget { needed: String, cap: u64 },

    #[error("no witness at M'={mprime} (m={m})")]
    Threshold { m: usize, mprime: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Domain(msg.into()))
}

pub(crate) fn truncation<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InsufficientTruncation(msg.into()))
}
