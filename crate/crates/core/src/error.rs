use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The arguments are well formed but outside the domain where the
    /// requested quantity is defined (for instance the bounds need m >= 3).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("work budget exceeded: {operation} needs {required} units, budget is {budget}")]
    BudgetExceeded {
        operation: &'static str,
        required: u128,
        budget: u64,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Short machine-readable tag used on the CLI diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Domain(_) => "domain",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
