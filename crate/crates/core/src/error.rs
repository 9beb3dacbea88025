use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("entry law {law}: {reason}")]
    InvalidLaw { law: String, reason: String },

    #[error("degenerate truncation for entry law {law}: sigma = 0 at threshold {threshold}")]
    DegenerateTruncation { law: String, threshold: f64 },

    #[error("eigensolver did not converge within {iterations} iterations (matrix hash {hash:016x})")]
    NoConvergence { iterations: usize, hash: u64 },

    #[error("quadrature did not converge on [{a}, {b}] (estimated error {error:e})")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("replicate {replicate} of n = {n} failed (replay seed {seed}): {source}")]
    Replicate {
        n: usize,
        replicate: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
