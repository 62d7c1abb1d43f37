use std::path::PathBuf;

/// Failures of the simulation layer, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("missing files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    Missing(Vec<PathBuf>),
    #[error(transparent)]
    Core(#[from] kmt_core::Error),
    #[error("{0}")]
    Run(String),
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }

    /// 2 for configuration and missing-input problems, 3 for I/O, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config { .. } | SimError::Invalid(_) | SimError::Missing(_) => 2,
            SimError::Io { .. } => 3,
            SimError::Core(_) | SimError::Run(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
