use thiserror::Error;

/// Errors raised by the tomography toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("order mismatch: expected {expected}, got {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing polarization value for subset {0:?}")]
    MissingSubset(Vec<usize>),

    #[error("phantom kind `{0}` has no closed-form Fourier transform")]
    UnsupportedKind(&'static str),

    #[error("grid too large for direct convolution: {size} nodes on an axis (limit {limit})")]
    GridTooLarge { size: usize, limit: usize },

    #[error("grid exhausted: needs at least {required} nodes per axis, has {available}")]
    GridExhausted { required: usize, available: usize },

    #[error("insufficient directions: need at least {required}, got {found}")]
    InsufficientDirections { required: usize, found: usize },

    #[error("zero mode carries nonzero mean {mean:e} under the `error` policy")]
    NonzeroMean { mean: f64 },

    #[error("field does not decay at the domain boundary (max boundary magnitude {boundary:e}, peak {peak:e})")]
    NoBoundaryDecay { boundary: f64, peak: f64 },

    #[error("zero denominator in ratio")]
    ZeroDenominator,

    #[error("metadata mismatch: {0}")]
    Metadata(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
