use thiserror::Error;

/// Errors produced by the moment engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("numeric failure in {context}: residual estimate {residual:e}")]
    NumericFailure { context: String, residual: f64 },

    #[error(
        "series did not converge in {context}: truncation residual {residual:e} above tolerance"
    )]
    NonConvergence { context: String, residual: f64 },

    #[error("infinite moment: {0}")]
    InfiniteMoment(String),

    #[error("degenerate process: {0}")]
    DegenerateProcess(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("estimate is degenerate: {0}")]
    EstimationDegenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for the two convergence-related variants.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NumericFailure { .. } | Error::NonConvergence { .. }
        )
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<f64> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {value}")))
    }
}

pub(crate) fn ensure_nonnegative(name: &str, value: f64) -> Result<f64> {
    ensure_finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be >= 0, got {value}")))
    }
}
