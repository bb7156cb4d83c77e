//! Command errors and their process exit codes.

use thiserror::Error;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for a degenerate estimate or statistic.
pub const EXIT_DEGENERATE: i32 = 2;
/// Exit code for invalid arguments or input data.
pub const EXIT_USAGE: i32 = 64;
/// Exit code for an internal numerical failure.
pub const EXIT_NUMERIC: i32 = 70;

/// Failure of a CLI command.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or inconsistent command-line arguments.
    #[error("usage error: {0}")]
    Usage(String),
    /// A malformed input row.
    #[error("input row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error(transparent)]
    Library(#[from] sphcard::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(sphcard::Error::Degenerate(_)) => EXIT_DEGENERATE,
            CliError::Library(sphcard::Error::Numeric(_) | sphcard::Error::Resource(_)) => EXIT_NUMERIC,
            CliError::Library(_)
            | CliError::Usage(_)
            | CliError::Row { .. }
            | CliError::Io(_)
            | CliError::Csv(_)
            | CliError::Json(_) => EXIT_USAGE,
        }
    }
}

/// Result alias for CLI operations.
pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
