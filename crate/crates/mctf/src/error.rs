use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the tensor algebra, the solver and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An inverse transform left an imaginary residual too large to be
    /// rounding noise, meaning the caller corrupted conjugate symmetry.
    #[error("numerical consistency: {0}")]
    NumericalConsistency(String),

    /// The solver produced a non-finite iterate; `block` names the update
    /// that produced it.
    #[error("solver diverged in block {block}")]
    Divergence { block: &'static str },

    #[error("format error in {path:?} at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
