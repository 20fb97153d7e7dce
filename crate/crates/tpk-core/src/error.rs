use thiserror::Error;

/// Error type shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis is not orthonormal: ||B*B - I|| = {residual:.3e}")]
    NonOrthonormalBasis { residual: f64 },

    #[error("certificate failure: {0}")]
    CertificateFailure(String),

    #[error("invalid Halmos form: {0}")]
    InvalidForm(String),

    #[error("resolvent schedule exhausted without meeting the stopping rule")]
    NoConvergence(Box<crate::resolvent::ResolventTrace>),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("bad grid: need at least 2 nodes, got {0}")]
    BadGrid(usize),

    #[error("invalid pair spec: {0}")]
    InvalidSpec(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("malformed matrix data: {0}")]
    BadMatrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;
