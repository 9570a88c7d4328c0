use thiserror::Error;

use crate::params::Violation;

pub type Result<T> = std::result::Result<T, CknError>;

#[derive(Debug, Error)]
pub enum CknError {
    #[error("invalid parameters: {}", format_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gamma function overflows at x = {0}")]
    Overflow(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("divergent integral ({term}): {reason}")]
    DivergentIntegral { term: &'static str, reason: String },

    #[error("quadrature failure ({context}): estimated error {error:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureFailure { context: String, error: f64, tolerance: f64 },

    #[error("degenerate profile: the r-term integral vanishes")]
    DegenerateProfile,

    #[error(
        "origin density has no limit: successive ratios {last:.12e} and {previous:.12e} still differ at radius 2^-40"
    )]
    NoLimit { last: f64, previous: f64 },

    #[error("constant C = {constant:.17e} is below the sharp Euclidean constant {copt:.17e}")]
    InvalidConstant { constant: f64, copt: f64 },

    #[error("minimizer did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("unsupported profile operation: {0}")]
    UnsupportedProfile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CknError {
    /// True for errors caused by bad inputs, as opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            CknError::InvalidParams(_)
                | CknError::InvalidInput(_)
                | CknError::DomainError(_)
                | CknError::DivergentIntegral { .. }
                | CknError::InvalidConstant { .. }
                | CknError::UnsupportedProfile(_)
                | CknError::Io(_)
                | CknError::Csv(_)
                | CknError::Json(_)
        )
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.constraint.to_string()).collect::<Vec<_>>().join("; ")
}
