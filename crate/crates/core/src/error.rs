use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dilation coordinate must be strictly positive and finite, got {0}")]
    NonPositiveScale(f64),

    #[error("direction vector must be finite and nonzero")]
    DegenerateDirection,

    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("grid has {cells} nodes, above the limit of {limit}")]
    GridTooLarge { cells: usize, limit: usize },

    #[error("field has {got} values but the grid has {expected} nodes")]
    ValueCount { expected: usize, got: usize },

    #[error("field values must be finite")]
    NonFiniteValue,

    #[error("exponent p must be >= 1 (or infinity), got {0}")]
    InvalidExponent(f64),

    #[error("radius set must be nonempty, finite, positive and strictly increasing")]
    InvalidRadii,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain truncation too large: {0}")]
    Truncation(String),

    #[error("report entry `{0}` has no provenance")]
    MissingProvenance(String),

    #[error("malformed field snapshot: {0}")]
    Snapshot(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
