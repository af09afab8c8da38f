use std::path::PathBuf;

/// Errors raised by experiment runners and file formats.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] galerkin_core::Error),
    #[error("trajectory {index} (seed {seed}, stream {index}) failed: {source}")]
    Trajectory {
        index: u64,
        seed: u64,
        #[source]
        source: galerkin_core::Error,
    },
    #[error("trajectory {index} (seed {seed}) broke {quantity} conservation: drift {drift:e} above {threshold:e}")]
    Conservation {
        index: u64,
        seed: u64,
        quantity: &'static str,
        drift: f64,
        threshold: f64,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed field file: {0}")]
    Format(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}
