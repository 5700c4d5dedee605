use thiserror::Error;

/// Errors produced by the tensor, projection, factor and completion routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("cannot reshape {from:?} ({from_len} entries) into {to:?} ({to_len} entries)")]
    SizeMismatch {
        from: Vec<usize>,
        from_len: usize,
        to: Vec<usize>,
        to_len: usize,
    },

    #[error("tensor has zero total sum")]
    ZeroTensor,

    #[error("support violation: p > 0 where q = 0 at flat index {0}")]
    SupportViolation(usize),

    #[error("mask selects no entries with nonzero reference norm")]
    EmptyMask,

    #[error("tensor is not normalized (total sum {0})")]
    NotNormalized(f64),

    #[error("natural parameters are undefined: zero entry at flat index {0}")]
    ZeroEntry(usize),

    #[error("invalid expectation parameters: reconstructed entry {value} at flat index {index}")]
    InvalidEta { index: usize, value: f64 },

    #[error("log-domain overflow while decoding natural parameters")]
    Overflow,

    #[error("bad order: {0}")]
    BadOrder(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("bad modes: {0}")]
    BadModes(String),

    #[error("singular Fisher system after {retries} damping retries")]
    SingularSystem { retries: usize },

    #[error("did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("natural parameters outside the interaction set (max |theta| = {0:.3e})")]
    OffModel(f64),

    #[error("factor set is not a cyclic two-body factorization: {0}")]
    NotCyclic(String),

    #[error("no observed entries")]
    EmptyObservation,

    #[error("invalid option: {0}")]
    InvalidOption(String),
}

pub type Result<T> = std::result::Result<T, Error>;
