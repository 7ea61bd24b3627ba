use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An exhaustive routine was asked to enumerate beyond its cap.
    #[error("capacity exceeded: {what} has size {size}, cap is {cap}")]
    Capacity { what: String, size: usize, cap: usize },

    /// The counting oracle has no objects (for example a disconnected graph).
    #[error("no bases: the vertex set is empty")]
    NoBases,

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A point lies outside a convex hull; `separator` is a vector `a` with
    /// `a·x > max_u a·u` over the hull vertices.
    #[error("infeasible: {message}")]
    Infeasible { message: String, separator: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two components that must describe the same polytope disagree.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
