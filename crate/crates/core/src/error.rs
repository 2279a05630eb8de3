use std::path::PathBuf;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is rank deficient (smallest pivot {min_pivot:e}, largest {max_pivot:e})")]
    SingularMatrix { min_pivot: f64, max_pivot: f64 },

    #[error("golden-section search did not converge after {iterations} iterations, bracket [{lo}, {hi}]")]
    ConvergenceFailure { iterations: usize, lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
