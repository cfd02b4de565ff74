//! Brute-force reference solvers for the test suites.
//!
//! Everything in this crate is deliberately slow and simple, shares nothing with the
//! production solvers beyond the core types, and certifies its answers or refuses to.
//! Tests that receive a refusal are expected to skip loudly, never to pass silently.

mod joint;
mod proj;
mod qp;

pub use joint::{oracle_joint_prox, tv_chain_terms, OracleTerm};
pub use proj::{project_box, project_l1_ball_sort, project_lq_ball_bisect};
pub use qp::oracle_tv1d_dual_qp;

use thiserror::Error;

/// Hard size cap for the 1D dual-QP oracle; it exists for desk-scale checks only.
pub const QP_ORACLE_MAX_LEN: usize = 256;

/// Hard size cap for the joint-prox oracle.
pub const JOINT_ORACLE_MAX_LEN: usize = 64;

/// A certified reference solution.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub solution: Vec<f64>,
    /// Measured duality gap at the returned point; at most 1e-10 or the oracle
    /// would have refused to certify.
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle input of length {n} exceeds the desk-scale cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("oracle refused to certify: {0}")]
    NotCertified(String),
    #[error("oracle does not support this problem: {0}")]
    Unsupported(String),
}

/// Gap threshold above which the oracle refuses to certify a solution.
pub(crate) const CERTIFY_GAP: f64 = 1e-10;
