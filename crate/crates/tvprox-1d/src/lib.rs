//! One-dimensional total-variation proximity solvers.
//!
//! This crate hosts the direct (taut-string) solvers for the TV-L1 prox and
//! the iterative solvers for the TV-L2, general TV-Lp, and TV-Linf proxes.
//! All of them consume a `Signal` plus weights and return the proximal point
//! together with a `SolverReport` carrying certificates; the TV-L1 family
//! additionally offers allocation-free in-place entry points over raw slices.

pub mod deque;
pub mod l1;
pub mod l2;
pub mod lp;
pub mod newton;

pub use l1::{
    dual_from_primal, prox_tv1d_l1_classic, prox_tv1d_l1_classic_inplace, prox_tv1d_l1_hybrid,
    prox_tv1d_l1_hybrid_inplace, prox_tv1d_l1_linearized, prox_tv1d_l1_linearized_inplace,
};
pub use l2::{prox_tv1d_l2_gp, prox_tv1d_l2_hybrid, prox_tv1d_l2_msn};
pub use lp::{
    project_l1_ball, project_lq_ball, prox_lp_norm_pn, prox_tv1d_linf, prox_tv1d_lp_fw,
    prox_tv1d_lp_gp, prox_tv1d_lp_hybrid, LpProxHessian,
};
pub use newton::{pn_stepsize, prox_tv1d_l1_pn, reduced_hessian_solve, ActiveSet, TridiagonalFactor};
