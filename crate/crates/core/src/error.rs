use thiserror::Error;

/// Errors raised by the phase-space machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("matrix is {rows}x{cols}; expected a square matrix of even dimension")]
    BadShape { rows: usize, cols: usize },

    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("covariance matrix is unphysical: smallest symplectic eigenvalue {eigenvalue} < 1")]
    Unphysical { eigenvalue: f64 },

    #[error("mode index {index} out of range for {n_modes} modes")]
    BadModeIndex { index: usize, n_modes: usize },

    #[error("duplicate or empty mode selection")]
    BadModeSelection,

    #[error("matrix is not symplectic (max deviation {deviation:e})")]
    NotSymplectic { deviation: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("conditioning matrix is numerically singular")]
    SingularConditioning,

    #[error("sample count must be at least 2, got {0}")]
    BadCount(usize),

    #[error("discriminant {discriminant:e} is negative; input is not a physical two-mode state")]
    ComplexEigenvalue { discriminant: f64 },

    #[error(
        "state is not symmetric under exchange of the unmeasured modes (deviation {deviation:e})"
    )]
    NotBisymmetric { deviation: f64 },

    #[error("arccos argument {argument} outside [-1, 1]")]
    DomainError { argument: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("malformed covariance-matrix file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, GaussError>;
