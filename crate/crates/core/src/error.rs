use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point is not strictly feasible; violated: {}", .violated.join(", "))]
    Infeasible { violated: Vec<String> },

    #[error("Newton step left the domain (decrement {decrement:.3e})")]
    StepInfeasible { decrement: f64 },

    #[error("Newton decrement {decrement:.3e} exceeded 1/4 at main-stage iteration {iteration}")]
    ContractViolation { iteration: usize, decrement: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The caller's promise about the shift does not hold (or the solver could
    /// not make progress as if it did not).
    #[error("{0}")]
    PromiseViolation(String),

    #[error("polytope is a point")]
    PolytopeIsPoint,

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Whether this error reports a violated promise about the instance rather
    /// than malformed input.
    pub fn is_promise_violation(&self) -> bool {
        matches!(self, Error::PromiseViolation(_))
    }
}
