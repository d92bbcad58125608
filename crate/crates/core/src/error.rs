use alloc::string::String;

/// Errors raised by the matching toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The problem is too large for the requested exhaustive method.
    #[error("refusing N = {n}: this method is limited to N <= {limit}")]
    TooLarge { n: usize, limit: usize },

    /// An iterative solver exhausted its iteration budget.
    #[error("solver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// A single Monte Carlo trial failed.
    #[error("trial {index} (seed {seed:#018x}) failed: {message}")]
    Trial {
        index: u64,
        seed: u64,
        message: String,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by invalid inputs rather than numerical failure.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::TooLarge { .. })
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
