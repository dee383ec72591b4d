use std::path::{Path, PathBuf};

use robmix_core::Error as CoreError;

/// Errors surfaced by the command line, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, flag combinations or configuration files.
    #[error("{0}")]
    Usage(String),

    /// Every requested fit failed.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub const EXIT_USAGE: i32 = 2;
    pub const EXIT_FIT: i32 = 3;
    pub const EXIT_IO: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::Fit(_) => Self::EXIT_FIT,
            CliError::Io { .. } | CliError::Format { .. } => Self::EXIT_IO,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn format(path: &Path, message: impl ToString) -> Self {
        CliError::Format { path: path.to_path_buf(), message: message.to_string() }
    }
}

/// Invalid arguments are usage errors; anything that went wrong while
/// estimating is a fit failure.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_) | CoreError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Fit(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
