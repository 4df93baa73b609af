//! Error type shared by all solvers.

/// Errors reported by the library.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An input value lies outside the domain of the operation
    /// (e.g. a quality level outside `[0, 1]`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested value lies outside the attainable range
    /// (e.g. inverting a cost above `c(1)`).
    #[error("range error: {0}")]
    Range(String),

    /// A structural precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative routine failed to converge within its iteration budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A solved structure disagrees with the case analysis that produced it.
    #[error("internal consistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
