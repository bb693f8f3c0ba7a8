use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config values or inconsistent requests.
    #[error("{0}")]
    Usage(String),
    /// A file that exists but cannot be understood.
    #[error("{}: {msg}", path.display())]
    Data { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] lczfuse_core::Error),
}

impl CliError {
    pub fn data(path: impl AsRef<Path>, msg: impl Into<String>) -> Self {
        CliError::Data { path: path.as_ref().to_path_buf(), msg: msg.into() }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }

    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(lczfuse_core::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }
}

/// Attach a file name to core errors raised while reading it.
pub(crate) trait WithPath<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> WithPath<T> for std::result::Result<T, lczfuse_core::Error> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|e| match e {
            lczfuse_core::Error::Numerical(_) => CliError::Core(e),
            e => CliError::data(path, e.to_string()),
        })
    }
}
