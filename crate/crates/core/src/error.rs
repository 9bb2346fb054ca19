use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("input outside the valid domain: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations (last iterate {last}, residual {residual:e})")]
    Convergence { last: f64, residual: f64, iterations: usize },

    #[error("{what} did not reach its tolerance (estimate {estimate}, error bound {error:e})")]
    Accuracy { what: &'static str, estimate: f64, error: f64 },

    /// The system at this parameter does not have the two-stable-fixed-point structure.
    #[error("structural assumption violated: {0}")]
    Structure(String),

    #[error("no threshold found: {0}")]
    NoThreshold(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid coupling window: {0}")]
    InvalidWindow(String),

    #[error("profile has no kink")]
    NoKink,

    #[error("velocity measurement failed: {0}")]
    Measurement(String),

    #[error("profile is not yet solitonic (alignment residual {residual:e})")]
    NotSolitonic { residual: f64 },

    #[error("degenerate profile: denominator {denom:e}")]
    DegenerateProfile { denom: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
