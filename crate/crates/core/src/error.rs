use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("byte length {actual} does not match dims (expected {expected})")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("non-finite value at flat index {index}")]
    NonFiniteValue { index: usize },

    #[error("invalid dimensions {0:?}: need 1 to 3 extents, each at least 1")]
    InvalidDims(Vec<usize>),

    #[error("anchor stride {0} is not a power of two >= 2")]
    InvalidStride(usize),

    #[error("block origin {origin:?} lies outside grid {dims:?}")]
    OutOfBounds {
        origin: Vec<usize>,
        dims: Vec<usize>,
    },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("corrupt stream: unsupported version {0}")]
    UnsupportedVersion(u8),

    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("lag {lag} too large for {points} points")]
    LagTooLarge { lag: usize, points: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("value range is zero; a range-relative bound is undefined")]
    ZeroRange,

    #[error("block size {block} exceeds every grid extent {dims:?}")]
    BlockTooLarge { block: usize, dims: Vec<usize> },

    #[error("metric undefined: {0}")]
    Undefined(&'static str),
}

impl Error {
    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptStream(msg.into())
    }

    /// True for errors caused by a malformed compressed stream.
    pub fn is_corruption(&self) -> bool {
        matches!(self, Error::CorruptStream(_) | Error::UnsupportedVersion(_))
    }
}
