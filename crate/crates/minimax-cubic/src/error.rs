//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Structured failures surfaced by problem construction, solvers, and drivers.
///
/// Every variant names the offending quantity so callers (and the CLI) can
/// report actionable diagnostics instead of panicking deep inside a solve.
#[derive(Debug, Error)]
pub enum Error {
    /// Smoothness or concavity constants violate `0 < mu <= ell`, `rho > 0`.
    #[error("invalid problem constants: {0}")]
    InvalidConstants(String),

    /// An argument has the wrong dimension.
    #[error("dimension mismatch for `{arg}`: expected {expected}, got {got}")]
    DimMismatch {
        arg: &'static str,
        expected: usize,
        got: usize,
    },

    /// An argument is outside its documented domain.
    #[error("invalid argument `{arg}`: {msg}")]
    InvalidArgument { arg: &'static str, msg: String },

    /// A quantity became NaN or infinite during iteration.
    #[error("non-finite {what} at iteration {iter}")]
    NonFinite { what: &'static str, iter: usize },

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix `{arg}` is not symmetric positive definite: {msg}")]
    NotPositiveDefinite { arg: &'static str, msg: String },

    /// The secular root-find inside the exact cubic solver did not converge.
    /// Carries the final bracket so the caller can see how close it got.
    #[error(
        "cubic secular root-find did not converge after {iters} iterations; \
         bracket [{lo:.6e}, {hi:.6e}], residual {residual:.3e}"
    )]
    RootFindFailed {
        iters: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    /// The terminal gradient-descent refinement exceeded its iteration cap.
    #[error(
        "final cubic solver exceeded its cap of {cap} iterations \
         (model gradient norm {grad_norm:.3e}, target {target:.3e})"
    )]
    FinalSolverCap {
        cap: u64,
        grad_norm: f64,
        target: f64,
    },

    /// An operation needs a dense Hessian but the model only has an operator.
    #[error("dense Hessian required for {0}")]
    DenseRequired(&'static str),
}
