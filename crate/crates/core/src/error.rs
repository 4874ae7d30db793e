use thiserror::Error;

/// Errors raised by the geometric primitives and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    /// A matrix that must be positive definite (or invertible) is not,
    /// or is too close to the boundary of the cone.
    #[error("singular input: {0}")]
    SingularInput(String),

    /// Input outside the domain of an operation (unequal means, det <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Input claimed to be symmetric differs from its transpose beyond tolerance.
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    Asymmetric(f64),

    #[error("no convergence after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, GeomError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch { expected, found })
    }
}
