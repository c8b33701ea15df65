use std::process::ExitCode;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or insufficient input data (exit 2).
    #[error(transparent)]
    Data(stormcast::Error),
    /// A bug or an unexpected environment failure (exit 3).
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        })
    }
}

impl From<stormcast::Error> for CliError {
    fn from(e: stormcast::Error) -> Self {
        match e {
            stormcast::Error::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
