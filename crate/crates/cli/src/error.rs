use apd_noise::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input: bad flags, unreadable or unparsable files.
    #[error("parse error: {0}")]
    Parse(String),

    /// Well-formed input that violates a model invariant.
    #[error("invalid input: {0}")]
    Domain(String),

    /// A reference check did not pass.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
        }
    }

    pub(crate) fn domain(context: impl std::fmt::Display, err: ModelError) -> Self {
        CliError::Domain(format!("{context}: {err}"))
    }
}

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        CliError::Domain(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
