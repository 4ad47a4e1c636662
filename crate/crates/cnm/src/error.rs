use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by loaders, writers and commands.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("path does not exist: {}", .0.display())]
    MissingPath(PathBuf),
    #[error("{path}:{line}: {msg}", path = .path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cnm_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit status: 2 missing input, 3 configuration, 4 data or
    /// parse, 5 numeric failure, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use cnm_core::Error as E;
        match self {
            CliError::MissingPath(_) => 2,
            CliError::Config(_) | CliError::Core(E::Config(_) | E::Shape { .. }) => 3,
            CliError::Parse { .. } | CliError::Core(E::Data(_) | E::Lookup { .. } | E::Domain(_)) => 4,
            CliError::Core(E::Numeric(_) | E::Degenerate(_)) => 5,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }
}

/// Fails with [`CliError::MissingPath`] unless `path` exists.
pub fn require_path(path: &std::path::Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingPath(path.to_path_buf()))
    }
}
