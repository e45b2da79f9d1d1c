use thiserror::Error;

/// Errors produced while building, assembling or solving a discretization.
#[derive(Debug, Error)]
pub enum EdgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature exactness {requested} is not supported (maximum {max})")]
    UnsupportedDegree { requested: usize, max: usize },

    /// `tau1 - beta.n / 2` is not positive somewhere on the boundary of an element.
    #[error(
        "stabilization condition violated on face {face} (element {element}): \
         tau1 - beta.n/2 = {value:e} at ({x}, {y})"
    )]
    StabilizationCondition {
        face: usize,
        element: usize,
        value: f64,
        x: f64,
        y: f64,
    },

    #[error("local elimination failed on element {element}: {reason}")]
    CondensationFailure { element: usize, reason: String },

    #[error("sparse factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EdgError> = std::result::Result<T, E>;
