//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or dimensions of an operation's inputs do not line up.
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    /// A container invariant was violated (negative variance, length skew).
    #[error("invalid moments: {0}")]
    InvalidMoments(String),

    /// An operation precondition failed (bad hyperparameter, empty batch).
    #[error("precondition failed in {op}: {detail}")]
    Precondition { op: &'static str, detail: String },

    /// Gradient requested for a non-scalar tape node.
    #[error("backward requires a scalar loss node, got {0}")]
    NonScalarLoss(String),

    /// Training diverged (non-finite objective).
    #[error("numerical divergence at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    /// Dataset ingestion failure.
    #[error("data error: {0}")]
    Data(String),

    /// I/O failure while reading a dataset or artifact.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn pre(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
