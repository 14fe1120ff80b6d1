use alloc::string::String;

/// Errors shared by all simulation modules.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    /// A parameter violates its domain (non-positive step, alpha out of
    /// range, zero coefficient component, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A time grid could not be constructed or indexed.
    #[error("grid error: {0}")]
    Grid(String),

    /// A path or trajectory does not cover the requested time window.
    #[error("out of support: {0}")]
    OutOfSupport(String),

    /// Two objects that must share a grid do not.
    #[error("grid alignment mismatch: {0}")]
    Alignment(String),

    /// Inconsistent dimensions between states, drifts or coefficients.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The integrator produced a non-finite or runaway state.
    #[error("solution diverged at t = {time}: {detail}")]
    Divergence { time: f64, detail: String },

    /// A numeric routine failed to converge or overflowed.
    #[error("numeric failure: {0}")]
    Numeric(String),
}
