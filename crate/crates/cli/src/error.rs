use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] retrodict_core::Error),
    #[error("no data to plot")]
    NoData,
    #[error("{0} properties failed")]
    PropertyFailure(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), message: message.into() }
    }

    /// 1 property failure, 2 usage or configuration error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::PropertyFailure(_) => 1,
            CliError::Usage(_) | CliError::Core(_) | CliError::NoData => 2,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
