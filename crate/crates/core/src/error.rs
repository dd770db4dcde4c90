use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} = {value:?} is outside its domain ({domain})")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid distribution: {}", .0.join("; "))]
    InvalidDistribution(Vec<String>),

    #[error("invalid fluid queue: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate conditioning: {0}")]
    Degenerate(String),

    #[error(
        "model unstable: expected {expected} eigenvalues of Q*R^-1 with nonnegative real part, found {found}"
    )]
    Instability { expected: usize, found: usize },

    #[error("numerical failure: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, condition: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            condition,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True when the failure is a numerical or stability problem rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Numerical { .. } | Error::Instability { .. } | Error::Degenerate(_)
        )
    }
}
