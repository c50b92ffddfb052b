use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// The variants are grouped so that a front end can map them onto a small
/// set of exit codes: malformed input, a mathematical verdict that blocks
/// the requested computation, a size guard, and numerical failure.
#[derive(Debug, Error)]
pub enum QdistError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e} > {tol:.3e})")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("operator is not traceless (|tr| = {trace:.3e} > {tol:.3e})")]
    NotTraceless { trace: f64, tol: f64 },

    #[error("system is not controllable: {0}")]
    NotControllable(String),

    #[error("certificate rejected: {0}")]
    InvalidCertificate(String),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = QdistError> = std::result::Result<T, E>;
