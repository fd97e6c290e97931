use alloc::string::String;

use crate::types::StratumSignature;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("span ({begin}, {end}) out of range for text length {len}")]
    SpanOutOfRange { begin: usize, end: usize, len: usize },

    #[error("malformed target sequence at position {position}: {reason}")]
    Parse { position: usize, reason: &'static str },

    #[error("instance {id}: {reason}")]
    Validation { id: String, reason: String },

    #[error("stratum {stratum} has {available} instances, quota asks for {requested}")]
    Quota {
        stratum: StratumSignature,
        available: usize,
        requested: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unknown token id {0}")]
    Vocab(usize),

    #[error("sequence length {len} exceeds capacity {max}")]
    Capacity { len: usize, max: usize },

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    #[error("no head named {0}")]
    UnknownHead(String),

    #[error("index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("misaligned inputs: {left} predictions vs {right} references")]
    Misaligned { left: usize, right: usize },

    #[error("aspect count {0} out of range 1..=5")]
    CountOutOfRange(usize),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
}
