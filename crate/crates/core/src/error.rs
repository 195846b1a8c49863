use thiserror::Error;

/// Errors raised by the phase-space and oracle routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("phase-space matrices need an even dimension, got {0}")]
    OddDimension(usize),

    #[error("matrix is not symmetric at ({row}, {col}): |difference| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("covariance matrix violates V + iΩ >= 0 (min eigenvalue {min_eig:e})")]
    NotBonaFide { min_eig: f64 },

    #[error("V_sigma - V_rho is not positive definite (min eigenvalue {min_eig:e})")]
    DomainViolation { min_eig: f64 },

    #[error("singular matrix: {0}")]
    Singular(&'static str),

    #[error("matrix function argument has eigenvalue {eig:e} outside its domain")]
    NegativeArgument { eig: f64 },

    #[error("arcoth argument has eigenvalue {eig:e} <= 1 + tolerance")]
    ArcothDomain { eig: f64 },

    #[error("symplectic eigenvalues of V_sigma must exceed 1 (found {nu:e})")]
    PureReference { nu: f64 },

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("mu = {mu} lies outside the open interval ({lo}, {hi})")]
    OutsideInterval { mu: f64, lo: f64, hi: f64 },

    #[error("operation is single-mode only, got {0} modes")]
    MultiMode(usize),

    #[error("invalid Renyi order {0}; need alpha >= 1")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock truncation lost {deficit:e} of the trace (threshold {threshold:e})")]
    TraceDeficit { deficit: f64, threshold: f64 },

    #[error("ill-conditioned operator: {0}")]
    IllConditioned(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that come from the `V_sigma > V_rho` support requirement
    /// (or its single-mode boundary points) rather than malformed input.
    pub fn is_domain_violation(&self) -> bool {
        matches!(self, Error::DomainViolation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
