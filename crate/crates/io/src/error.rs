use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },

    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated data: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("line {line}: {message}")]
    CorruptLine { line: usize, message: String },

    #[error("unsupported schema version {found:?}, expected {expected:?}")]
    SchemaVersion { expected: String, found: String },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fplab_core::Error),
}

pub type IoResult<T> = Result<T, IoError>;

pub(crate) fn read_file(path: &std::path::Path) -> IoResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

pub(crate) fn file_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.to_path_buf(), source }
}
