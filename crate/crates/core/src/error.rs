use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    #[error("band structure violated: {0}")]
    Structure(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("missing matrix entry ({0}, {1})")]
    MissingEntry(usize, usize),

    #[error("improper density in message: {0}")]
    ImproperDensity(&'static str),

    #[error("singular evaluation point: {0}")]
    Singularity(&'static str),

    #[error("no proposal accepted during warmup in block `{0}`; change the proposal scale")]
    ZeroAcceptance(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}
