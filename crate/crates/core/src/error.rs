//! Error type shared by all modules.

/// Errors produced by construction, validation and the numerical operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A vector or matrix has the wrong length for the declared unit count.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A time lies outside the represented (or periodically extendable)
    /// range of the θ sequence.
    #[error("t = {t} is outside the represented θ-range starting at {theta0}")]
    OutOfThetaRange { t: f64, theta0: f64 },

    /// Structurally invalid input (bad sequence, bad parameter, ...).
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// An iteration failed to converge within its sweep budget.
    /// Carries the last iterate (may be empty when not meaningful) and the
    /// last observed step size.
    #[error("no convergence after {iterations} iterations (last step {last_delta:.3e})")]
    NoConvergence {
        iterations: usize,
        last_delta: f64,
        last: Vec<f64>,
    },

    /// The integrated state left the finite range. Carries the last finite
    /// sample.
    #[error("state diverged (non-finite) at t = {t}")]
    Diverged { t: f64, last: Vec<f64> },

    /// λ is undefined because the H4 quantity is ≥ 1.
    #[error("lambda-undefined: H4 quantity {quantity} >= 1")]
    LambdaUndefined { quantity: f64 },

    /// The requested operation needs an ω-periodic time structure.
    #[error("omega-required: {0}")]
    OmegaRequired(&'static str),

    /// A trajectory or grid does not cover the span needed by a check.
    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
