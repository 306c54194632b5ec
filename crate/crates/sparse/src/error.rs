use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular pivot at column {index} (original numbering)")]
    SingularPivot { index: usize },

    #[error("complex shift {re}+{im}i cannot be applied to a real matrix")]
    ComplexShiftOnRealMatrix { re: f64, im: f64 },

    #[error("unknown fill-reducing ordering '{0}'")]
    UnknownOrdering(String),

    #[error("invalid eigensolver configuration: {0}")]
    InvalidConfig(String),

    #[error("eigensolver did not converge after {restarts} restarts; residuals {residuals:?}")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },

    #[error("dense projected eigenproblem failed: {0}")]
    DenseFailure(String),
}

pub type Result<T> = std::result::Result<T, SparseError>;
