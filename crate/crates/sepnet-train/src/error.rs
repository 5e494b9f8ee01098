use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Kernel(#[from] sepnet_kernels::KernelError),
    #[error(transparent)]
    Model(#[from] sepnet_model::ModelError),
    #[error(transparent)]
    Data(#[from] sepnet_data::DataError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("metrics line {line}: {message}")]
    Metrics { line: usize, message: String },
    #[error("{0}")]
    InvalidArgument(String),
}

impl TrainError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn arg(message: impl Into<String>) -> Self {
        TrainError::InvalidArgument(message.into())
    }
}

pub type Result<T> = std::result::Result<T, TrainError>;
