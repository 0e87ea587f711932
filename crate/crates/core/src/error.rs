use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} for this operation")]
    UnsupportedDimension(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("elastic symmetry violated at {index:?}: {detail}")]
    SymmetryViolation { index: [usize; 4], detail: String },

    #[error("exact rational scalars required")]
    ExactScalarsRequired,

    #[error("zero polynomial")]
    ZeroPolynomial,

    #[error("polynomial has degree {degree} in `{var}`, need at least {needed}")]
    DegreeTooLow { var: String, degree: u32, needed: u32 },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("inexact polynomial division")]
    InexactDivision,

    #[error("polynomial parse error: {0}")]
    PolyParse(String),

    #[error("zero covector")]
    ZeroCovector,

    #[error("zero tangent vector")]
    ZeroVector,

    #[error("degenerate direction: relative qP gap {gap:e} below threshold {threshold:e}")]
    DegenerateDirection { gap: f64, threshold: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("fundamental tensor not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("finite-difference stencil at {point:?} leaves the evaluation region")]
    StencilOutsideDomain { point: Vec<f64> },

    #[error("step cap of {0} steps exceeded")]
    StepCapExceeded(usize),

    #[error("point {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("boundary normal parameter {s} outside [0, {epsilon})")]
    ParameterOutOfRange { s: f64, epsilon: f64 },

    #[error("initial vector is tangent to the boundary")]
    BoundaryTangency,

    #[error("field is not spherically symmetric")]
    NonRadialField,

    #[error("geodesic left the domain at t = {t_exit} before the fit window {window}")]
    EarlyExit { t_exit: f64, window: f64 },

    #[error("geodesic path is incomplete (no boundary exit recorded)")]
    IncompletePath,

    #[error("shooting failed after {restarts} restarts (best miss {miss:e})")]
    ShootingFailed { restarts: usize, miss: f64 },

    #[error("{0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
