use thiserror::Error;

/// Errors produced by the softfusion library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// An iterative special-function evaluation did not converge.
    #[error("{func} did not converge after {iterations} iterations")]
    NoConvergence { func: &'static str, iterations: usize },

    /// The target rate cannot be met by any SINR threshold in the search bracket.
    #[error("target rate {rate} bits/use is infeasible: no SINR threshold in ({lo:e}, {hi:e})")]
    InfeasibleRate { rate: f64, lo: f64, hi: f64 },

    /// Dimensions of a strategy or tensor do not match the space it refers to.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    /// A probability vector is not on the simplex.
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    /// Materializing a tensor would exceed the configured memory budget.
    #[error(
        "payoff tensor needs {needed_bytes} bytes but the budget is {budget_bytes} bytes; \
         use coarser power/threshold grids or the iterative solver"
    )]
    Capacity { needed_bytes: u128, budget_bytes: u128 },

    /// The game solver exhausted its iteration or pivot budget.
    #[error("solver did not reach gap {tol:e} within {iterations} iterations (best gap {best_gap:e})")]
    NotConverged { tol: f64, iterations: usize, best_gap: f64 },

    /// The power caps do not admit the requested number of disjoint robust intervals.
    #[error("cannot build {requested} disjoint robust intervals under the power caps; largest achievable is {achievable}")]
    InfeasiblePlan { requested: usize, achievable: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { func, detail: detail.into() }
}
