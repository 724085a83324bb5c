//! Error classification for the CLI.
//!
//! Subcommands exit with a stable code per failure class so scripts can
//! branch on them: 2 config, 3 data, 4 desync, 5 decoder.

use neuricam_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("desync: {0}")]
    Desync(String),
    #[error("decoder failure: {0}")]
    Decoder(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Desync(_) => 4,
            CliError::Decoder(_) => 5,
        }
    }

    /// Wrap an IO error with the path it concerns.
    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match &err {
            CoreError::Desync { .. } => CliError::Desync(err.to_string()),
            CoreError::Decoder { .. } => CliError::Decoder(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

/// Shorthand for config-classified validation.
pub fn config_err<T>(detail: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(detail.into()))
}
