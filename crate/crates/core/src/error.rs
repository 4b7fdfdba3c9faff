//! Error type shared across the core library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("coordinate mismatch on axis {axis}")]
    CoordinateMismatch { axis: usize },

    #[error("non-finite value in member {member} at point {point}")]
    NonFinite { member: usize, point: usize },

    #[error("ensemble must have at least 2 members, got {0}")]
    TooFewMembers(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("empty region {0}")]
    EmptyRegion(u32),

    #[error("invalid region mask: {0}")]
    InvalidMask(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("payload truncated: expected {expected} bytes, found {found}")]
    PayloadTruncated { expected: usize, found: usize },

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty reference list")]
    EmptyReference,

    #[error("length mismatch: member has {member_len} values, grid has {point_count} points")]
    LengthMismatch { member_len: usize, point_count: usize },

    #[error("permutations >= 99 required, got {0}")]
    TooFewPermutations(usize),

    #[error("negative statistic argument {0}")]
    NegativeArgument(f64),

    #[error("p-value outside [0, 1]: {0}")]
    InvalidPValue(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance factorization failed at leading minor {minor}")]
    FactorizationFailed { minor: usize },

    #[error("grid too large for dense factorization: {points} points (limit {limit})")]
    GridTooLarge { points: usize, limit: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
