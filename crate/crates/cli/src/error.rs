use std::path::PathBuf;

/// Exit status of a successful command.
pub const EXIT_OK: i32 = 0;
/// Bad flags, config values or sweep specs.
pub const EXIT_USAGE: i32 = 1;
/// Unreadable or malformed input data, or a failure while processing it.
pub const EXIT_DATA: i32 = 2;
/// Reports or plans that violate the evaluation protocol.
pub const EXIT_PROTOCOL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: rphar::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core { source, .. } if source.is_protocol() => EXIT_PROTOCOL,
            CliError::Core {
                source: rphar::Error::InvalidParameter(_),
                ..
            } => EXIT_USAGE,
            CliError::Core { .. } | CliError::Io { .. } => EXIT_DATA,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for rphar::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
