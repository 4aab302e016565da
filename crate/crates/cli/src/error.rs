use std::path::{Path, PathBuf};

use catchmap_core::export::ArtifactError;
use catchmap_core::ingest::IngestError;
use catchmap_core::ParamError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 0 ok, 1 usage, 2 data error, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { path, source } => CliError::Io { path, source },
            IngestError::Csv { path, source } if source.is_io_error() => CliError::Io { path, source: std::io::Error::other(source) },
            other => CliError::Data(other.to_string()),
        }
    }
}

pub fn artifact_error(path: &Path, e: ArtifactError) -> CliError {
    match e {
        ArtifactError::Io(io) => CliError::io(path, io),
        ArtifactError::Ingest(inner) => inner.into(),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}
