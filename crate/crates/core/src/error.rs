use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} = {value} outside the admissible range {range}")]
    Domain { what: &'static str, value: f64, range: String },

    #[error("volume constraint violated: expected {expected}, got {actual}")]
    VolumeMismatch { expected: f64, actual: f64 },

    #[error("degenerate level: the distribution function jumps across {target} near t = {level}")]
    DegenerateLevel { level: f64, target: f64 },

    #[error("integrand error: {0}")]
    Integrand(String),

    #[error("volume projection failed: {0}")]
    Projection(String),

    #[error("null space of the mode system is not one-dimensional (singular values {singular_values:?})")]
    Construction { singular_values: Vec<f64> },

    #[error("maximum search did not converge (best value {best} at {at:?})")]
    Maximization { best: f64, at: Vec<f64> },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("Green's function is singular at x = y")]
    Singularity,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64, range: impl Into<String>) -> Error {
    Error::Domain { what, value, range: range.into() }
}
