use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: empty CSV")]
    EmptyCsv { path: PathBuf },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: bad value `{value}` in column `{column}`")]
    BadValue { path: PathBuf, column: String, value: String },
    #[error(transparent)]
    Core(#[from] qdcoupler::CouplerError),
    #[error("{failed} of {total} sweep points failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for a partial sweep, 3 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Partial { .. } => 2,
            CliError::Config(_) => 3,
            CliError::Core(
                qdcoupler::CouplerError::InvalidGeometry(_)
                | qdcoupler::CouplerError::InvalidDipole(_)
                | qdcoupler::CouplerError::InvalidParameter(_),
            ) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
