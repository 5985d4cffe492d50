use thiserror::Error;

/// Errors raised by the detection toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scenario or sweep description violates its constraints.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested configuration is well formed but not supported by the routine.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// Input data is degenerate (singular matrix, non-positive denominator, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    /// A precondition on matrix structure was violated.
    #[error("contract violation: {0}")]
    ContractViolation(String),
    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by user-provided configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Unsupported(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
