use std::path::PathBuf;

/// Every failure carries a category that maps to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: topology error: {message}", path.display())]
    Topology { path: PathBuf, message: String },
    #[error("diverged: {0}")]
    Divergence(String),
    #[error("not converged: {0}")]
    Unconverged(String),
    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Artifact { .. } | CliError::Internal(_) => 1,
            CliError::Parse { .. } => 2,
            CliError::Topology { .. } => 3,
            CliError::Divergence(_) => 4,
            CliError::Unconverged(_) => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
