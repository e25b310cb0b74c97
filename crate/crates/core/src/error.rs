use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input violates a documented precondition or type invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point was passed outside the domain where the map is defined.
    #[error("domain violation: {0}")]
    Domain(String),

    /// An iterative solver ran out of iterations.
    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Two roots were too close to tell which branch continues the previous one.
    #[error("root tracking failed at x = {x}: candidate roots {gap:e} apart")]
    RootTracking { x: f64, gap: f64 },

    /// The cumulant sequence is not the cumulant sequence of a compactly supported measure.
    #[error("cumulant sequence is not admissible")]
    NotAdmissible,

    /// Two active coefficient ratios coincide, so the freeness criterion does not apply.
    #[error("coefficient ratios b_j/a_j coincide for active indices {0} and {1}")]
    RatioDegeneracy(usize, usize),

    /// The Linnik-type function built from |a_j| and |b_j| vanishes identically.
    #[error("Lambda_1 vanishes identically (absolute coefficients coincide as multisets)")]
    LambdaIdenticallyZero,
}

impl Error {
    /// True for numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::RootTracking { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
