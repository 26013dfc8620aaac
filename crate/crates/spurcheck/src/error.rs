use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] spurcheck_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("missing {path}; run `spurcheck {stage}` first")]
    MissingArtifact { path: PathBuf, stage: &'static str },
    #[error("{path} was written under config {found}, the current config is {expected}; rerun the upstream stages")]
    ConfigMismatch { path: PathBuf, found: String, expected: String },
    #[error("{0} is locked by another spurcheck run (remove the lock file if that run is gone)")]
    Locked(PathBuf),
    #[error("embedding manifest disagrees with the extracted contexts: {0}")]
    ManifestMismatch(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    /// Process exit code: 1 for usage errors, 2 for everything data related.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
