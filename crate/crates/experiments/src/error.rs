use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("unknown experiment {name:?}; valid names: {}", valid.join(", "))]
    UnknownExperiment { name: String, valid: Vec<&'static str> },

    #[error("missing data file {}", .0.display())]
    MissingData(PathBuf),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fplab_core::Error),

    #[error(transparent)]
    Io(#[from] fplab_io::IoError),
}

pub type ExpResult<T> = Result<T, ExpError>;
