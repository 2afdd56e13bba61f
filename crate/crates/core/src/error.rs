use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent out of range: {0}")]
    OutOfRange(String),

    #[error("singular matrix (determinant is zero)")]
    SingularMatrix,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid operator specification: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error("precision budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("cannot construct atom: {0}")]
    CannotConstruct(String),

    #[error("lattice point {0} is not in the region R")]
    NotInRegion(String),

    #[error("output window too small: {0}")]
    WindowTooSmall(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
