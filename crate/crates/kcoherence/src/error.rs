use std::path::{Path, PathBuf};

use kcoherence_core::Error;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const FAILURE: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const RANGE: i32 = 3;
    pub const NOT_RESOURCE: i32 = 4;
    pub const BOUND: i32 = 5;
    pub const IO: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}parse error: {message}", file_prefix(.path))]
    Parse { path: Option<PathBuf>, message: String },

    #[error("{}{source}", file_prefix(.path))]
    Core {
        path: Option<PathBuf>,
        #[source]
        source: Error,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn file_prefix(path: &Option<PathBuf>) -> String {
    path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default()
}

impl From<Error> for CliError {
    fn from(source: Error) -> Self {
        CliError::Core { path: None, source }
    }
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        CliError::Parse {
            path: None,
            message: message.into(),
        }
    }

    /// A core error raised while validating input data.
    pub fn invalid(source: Error) -> Self {
        CliError::Core { path: None, source }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attaches the file the error came from.
    pub fn in_file(self, file: &Path) -> Self {
        match self {
            CliError::Parse { message, .. } => CliError::Parse {
                path: Some(file.to_path_buf()),
                message,
            },
            CliError::Core { source, .. } => CliError::Core {
                path: Some(file.to_path_buf()),
                source,
            },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => exit::PARSE,
            CliError::Io { .. } => exit::IO,
            CliError::Core { source, .. } => match source {
                Error::InvalidState(_)
                | Error::NotNormalized { .. }
                | Error::InvalidOperator(_)
                | Error::NotHermitian(_)
                | Error::NotPositive(_)
                | Error::InvalidTrace(_)
                | Error::InvalidEffect(_) => exit::PARSE,
                Error::DimensionTooSmall(_)
                | Error::DimensionMismatch(..)
                | Error::LevelOutOfRange { .. }
                | Error::InvalidTolerance(_)
                | Error::InvalidConstraint { .. }
                | Error::InvalidScale(_)
                | Error::InvalidBudget(_) => exit::RANGE,
                Error::NotResourceState { .. } => exit::NOT_RESOURCE,
                Error::BoundViolation { .. } => exit::BOUND,
                Error::OracleNotConverged { .. } | Error::ConversionCheckFailed(_) => exit::FAILURE,
            },
        }
    }
}
