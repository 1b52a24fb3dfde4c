use thiserror::Error;

/// Errors raised across the detection and estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoaError {
    /// An argument fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The estimator could not produce the requested number of estimates.
    #[error("degraded estimate: {0}")]
    Degraded(String),

    /// A cluster phase average that does not map back to a physical angle.
    #[error("unmapped phase: {0} rad lies outside [-pi, pi]")]
    UnmappedPhase(f64),

    /// Gauss-Newton residual grew for three consecutive iterations.
    #[error("Gauss-Newton diverged after {iterations} iterations (residual {residual:.3e})")]
    Divergence {
        iterations: usize,
        residual: f64,
        /// Last iterate, stacked as (u, cofactors...).
        last_iterate: Vec<num_complex::Complex64>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl DoaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        DoaError::Domain(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error reporter.
    pub fn kind(&self) -> &'static str {
        match self {
            DoaError::Domain(_) => "domain_error",
            DoaError::Degraded(_) => "degraded_estimate",
            DoaError::UnmappedPhase(_) => "unmapped_phase",
            DoaError::Divergence { .. } => "divergence",
            DoaError::Config(_) => "config_error",
            DoaError::Parse(_) => "parse_error",
            DoaError::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for DoaError {
    fn from(e: std::io::Error) -> Self {
        DoaError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DoaError>;
