use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical parameter (step, cutoff, grid size, ...) is unusable.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A time integration drifted outside its accepted error budget.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// A Choi matrix carries an eigenvalue below the clipping tolerance.
    #[error("map is not completely positive: eigenvalue {eigenvalue:.3e} < -{tol:.1e}")]
    NotCompletelyPositive { eigenvalue: f64, tol: f64 },

    /// A matrix that must be inverted is singular.
    #[error("singular matrix: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
