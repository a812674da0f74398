use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid type {0}")]
    InvalidType(String),
    #[error("not a root: {0:?}")]
    NotARoot(Vec<i64>),
    #[error("invalid positive system: {0}")]
    InvalidPositiveSystem(String),
    #[error("invalid simple system: {0}")]
    InvalidSimpleSystem(String),
    #[error("generator search failed for block {block}: offending roots {roots:?}")]
    GeneratorSearchFailed { block: usize, roots: Vec<usize> },
    #[error("rescaling overflow at level {0}")]
    RescaleOverflow(usize),
    #[error("plan certificate failed after retries: {0}")]
    CertificateFailed(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("normalization failed: {0}")]
    NormalizationFailed(String),
    #[error("not in big cell: {0}")]
    NotInBigCell(String),
    #[error("zero torus parameter")]
    ZeroParameter,
    #[error("not in image: {0}")]
    NotInImage(String),
    #[error("stage assertion failed: {0}")]
    StageAssertionFailed(String),
    #[error("recipe mismatch: {0}")]
    RecipeMismatch(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
