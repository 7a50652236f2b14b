use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("solver did not converge after {iterations} iterations (last iterate {last}, residual {residual:e})")]
    SolverFailure {
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("numerical failure at iteration {iteration}: {what}")]
    NumericalFailure { iteration: usize, what: String },

    #[error("fixed-point and minimization routes disagree: {fixed_point} vs {minimizer}")]
    MethodDisagreement { fixed_point: f64, minimizer: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("at {context}: {source}")]
    AtPoint {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at(self, context: impl Into<String>) -> Self {
        Error::AtPoint {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with parameter context stripped.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root_cause(),
            other => other,
        }
    }

    /// True when the root cause is a numerical failure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalDomain(_)
            | Error::SolverFailure { .. }
            | Error::NumericalFailure { .. }
            | Error::MethodDisagreement { .. } => true,
            Error::AtPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
