use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("first moment must vanish, got {0}")]
    NonzeroFirstMoment(f64),

    #[error("unknown specification `{0}`")]
    UnknownSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver failed for n = {n}{}", replica.map(|r| format!(" (replica {r})")).unwrap_or_default())]
    Eigensolver { n: usize, replica: Option<usize> },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("metadata mismatch: {0}")]
    MetadataMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("limit extrapolation unavailable: {0}")]
    ExtrapolationUnavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
