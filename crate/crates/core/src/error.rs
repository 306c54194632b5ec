use thiserror::Error;

#[derive(Debug, Error)]
pub enum CouplerError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid dipole: {0}")]
    InvalidDipole(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("mode solve failed for {context}: {source}")]
    Eigen {
        context: String,
        #[source]
        source: qdc_sparse::SparseError,
    },
    #[error("no {0} mode found in the search window")]
    MissingMode(String),
    #[error("radiation calibration infeasible: {0}")]
    Calibration(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, CouplerError>;
