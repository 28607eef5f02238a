use std::path::Path;

use thiserror::Error;

/// Exit code for unreadable or malformed input files.
pub const EXIT_INPUT: u8 = 3;
/// Exit code for out-of-range or inconsistent parameters.
pub const EXIT_PARAMETER: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: homodiff::Error,
    },

    #[error("{0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Core(#[from] homodiff::Error),
}

impl CliError {
    pub fn file(path: &Path, source: impl Into<homodiff::Error>) -> Self {
        CliError::File {
            path: path.display().to_string(),
            source: source.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::File { .. } | CliError::Input(_) => EXIT_INPUT,
            CliError::Parameter(_) => EXIT_PARAMETER,
            CliError::Core(e) if e.is_parameter_error() => EXIT_PARAMETER,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
