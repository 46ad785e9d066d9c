//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmapError {
    /// Dimension disagreement between an input and what a component expects.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A call sequence or data contract was violated (stale cache, unfrozen
    /// surrogate, non-one-hot block, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Binary/CSV parse failure; `offset` is a byte offset into the source.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    /// Every sampled neighbour received the same label; the local linear fit
    /// is undefined. Callers may widen the kernel and retry.
    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),

    /// External black-box process misbehaved (exit status, malformed output,
    /// row/line count mismatch).
    #[error("black box adapter: {0}")]
    Adapter(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl EmapError {
    pub fn shape(context: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>) -> Self {
        EmapError::Shape {
            context: context.into(),
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, EmapError>;
