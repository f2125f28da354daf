//! Library side of the `trendalpha` command: configuration, pipeline
//! stages and subcommands.

pub mod commands;
pub mod config;
pub mod pipeline;

use thiserror::Error;

/// Failure classes with stable exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input, configuration, or a missing upstream artifact (exit 2).
    #[error("{0}")]
    User(String),
    /// Anything else (exit 1).
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<trendalpha::Error> for CliError {
    fn from(e: trendalpha::Error) -> Self {
        use trendalpha::Error as E;
        match e {
            E::Io(_) | E::Fetch { .. } => CliError::Internal(e.to_string()),
            other => CliError::User(other.to_string()),
        }
    }
}
