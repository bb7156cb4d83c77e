//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numerical method failed to converge.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// The request exceeds a configured memory or work budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    /// The data do not identify the requested estimate.
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    /// The operation has no implementation for these arguments.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
