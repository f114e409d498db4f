use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UrnError {
    /// A value fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration violated one of its constraints.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An operation was called with arguments that break its contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// A replication panicked inside the Monte Carlo harness.
    #[error("replication {rep_index} failed: {message}")]
    Replication { rep_index: usize, message: String },
}

pub type Result<T> = std::result::Result<T, UrnError>;
