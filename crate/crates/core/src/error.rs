use thiserror::Error;

/// Errors raised by model construction, training, and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("second input derivatives are undefined for the {0} activation")]
    SecondDerivativeUndefined(&'static str),

    #[error("loss requires a nonempty boundary set")]
    MissingBoundary,

    #[error("target amplitude is zero at key {0}")]
    ZeroTargetAmplitude(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unstable step: {0}")]
    Unstable(String),

    #[error("singular system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
