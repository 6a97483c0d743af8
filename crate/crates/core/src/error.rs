use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the forward and inverse solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("overflow while integrating at lambda = {lambda}")]
    Overflow { lambda: Complex64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("pole of {name} at lambda = {lambda}")]
    Pole { name: String, lambda: Complex64 },

    #[error("zero search failed: {0}")]
    Search(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("{condition} fails at lambda = {lambda}")]
    ConditionFailed { condition: String, lambda: Complex64 },

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("singular jacobian after {escalations} damping escalations")]
    SingularJacobian { escalations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by user input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Precondition(_) | Error::Json(_)
        )
    }
}
