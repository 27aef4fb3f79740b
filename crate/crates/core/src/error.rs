use thiserror::Error;

/// Errors raised by the operator, closed-form and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Spectrum left the admissible cone. `margin` is the normalized
    /// Gårding margin at the offending point, `node` the mesh index when known.
    #[error("cone violation (margin {margin:.3e}{})", node.map(|i| format!(" at node {i}")).unwrap_or_default())]
    ConeViolation { margin: f64, node: Option<usize> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("maximum principle violated: {0}")]
    MaximumPrinciple(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
