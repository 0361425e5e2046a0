//! CLI error taxonomy, mapped one-to-one onto process exit statuses.

use std::process::ExitCode;

use slimrnn_core::CoreError;

/// Exit statuses: 0 success, 1 check failed, 2 usage/config error, 3 numeric
/// fault, 4 persistence error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numeric fault: {0}")]
    Numeric(String),
    #[error("persistence error: {0}")]
    Persistence(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn persistence(msg: impl Into<String>) -> Self {
        CliError::Persistence(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::CheckFailed(_) => ExitCode::from(1),
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
            CliError::Persistence(_) => ExitCode::from(4),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NumericFault { .. } => CliError::Numeric(e.to_string()),
            CoreError::Contract(msg) => CliError::Usage(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Persistence(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
