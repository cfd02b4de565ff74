//! Shared foundation for the tvprox workspace: the signal and weight types every
//! solver consumes, the two-banded differencing operator, objective and duality-gap
//! evaluators, and the Moreau-decomposition check used throughout the test suites.
//!
//! All numeric work is done in `f64`; the duality-gap tolerances used by the solvers
//! (1e-5 and below) leave no useful headroom at single precision.

mod ops;
mod types;

pub use ops::{
    cumsum, diff_apply, diff_transpose_apply, dual_gap_l1, moreau_check, tv_objective,
};
pub use types::{DualVector, Signal, SolverOptions, SolverReport, WeightVector};

use thiserror::Error;

/// Errors surfaced by the core types and by the solvers built on top of them.
///
/// Iterative solvers that merely fail to reach their tolerance do not error;
/// they return their best iterate with `SolverReport::converged == false`.
#[derive(Debug, Error)]
pub enum TvError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal error: {0}")]
    Internal(String),
}
