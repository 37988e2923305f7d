use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{matrix} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { matrix: String, min_eigenvalue: f64 },
    #[error("non-finite entries in {0}")]
    NonFinite(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

impl Error {
    /// Structural errors are caller bugs (shapes, topology); numerical errors come from the data.
    pub fn is_structural(&self) -> bool {
        matches!(self, Error::DimensionMismatch(_) | Error::Unsupported(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
