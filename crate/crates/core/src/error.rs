use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A cell vector is too short to normalize.
    #[error("zero vector at cell {cell} (norm {norm:e})")]
    ZeroVector { cell: usize, norm: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// A non-finite component appeared; `step` is the 1-based index of the failing step.
    #[error("diverged at step {step}: non-finite value in cell {cell}")]
    Diverged { step: u64, cell: usize },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
