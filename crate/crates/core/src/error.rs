use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty point set")]
    EmptySet,

    #[error("point {0} lies outside the window")]
    OutsideWindow(String),

    #[error("translated support leaves the window")]
    WindowOverflow,

    #[error("unsupported dimension {d}: {reason}")]
    UnsupportedDimension { d: usize, reason: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite{0}")]
    NotPositiveDefinite(String),

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    #[error("regime not applicable: {0}")]
    RegimeNotApplicable(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
