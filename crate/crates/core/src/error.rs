use thiserror::Error;

/// Errors raised by the measure, kernel and semigroup routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidSpace(String),
    #[error("objects live on different state spaces")]
    SpaceMismatch,
    #[error("state {id} is not part of a space with {len} states")]
    UnknownState { id: usize, len: usize },
    #[error("expected {expected} entries, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("measure must be positive, found weight {weight} at state {state}")]
    NegativeMeasure { state: usize, weight: f64 },
    #[error("carrier has {n} states, oracle cap is {cap}")]
    CarrierTooLarge { n: usize, cap: usize },
    #[error("sequence is not increasing at term {0}")]
    NotMonotone(usize),
    #[error("sequence exceeds its bound at term {0}")]
    Unbounded(usize),
    #[error("basis family is empty")]
    EmptyBasis,
    #[error("basis family would exceed {0} members")]
    BasisTooLarge(usize),
    #[error("invalid time {0}")]
    InvalidTime(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },
    #[error("distance did not decrease over the trace (terminal distance {terminal:e})")]
    Divergence {
        terminal: f64,
        trace: Box<crate::semigroup::ConvergenceTrace>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
