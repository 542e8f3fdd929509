use thiserror::Error;

/// Errors raised by the twinrelay library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("message index {index} out of range (codebook has {size} points)")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("enumeration guard exceeded: {what} = {value} > {limit}")]
    GuardExceeded {
        what: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("generator matrix does not have full rank {expected} (codebook has {found} distinct points)")]
    RankDeficient { expected: usize, found: u64 },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("shell sums {first} and {second} share a direction; min-angle decoding is ambiguous")]
    DirectionCollision { first: usize, second: usize },

    #[error("root finder did not converge: {0}")]
    NoConvergence(String),

    #[error("unsolvable decode at slot {slot}, node {node}: {reason}")]
    UnsolvableDecode {
        slot: usize,
        node: usize,
        reason: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
