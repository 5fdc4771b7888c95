use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point lies outside the half-space chart (height {0})")]
    OutsideChart(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("points belong to different spaces")]
    MixedSpaces,

    #[error("point is off the hypersurface (relative residual {0:e})")]
    OffSurface(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrand has no declared compact support")]
    UnboundedSupport,

    #[error("support exceeds the truncation: {0}")]
    SupportExceedsTruncation(String),

    #[error("wrong basis: expected {expected} components")]
    WrongBasis { expected: &'static str },

    #[error("field is not certified divergence-free")]
    NotDivergenceFree,

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
