//! Proximal splitting combiners.
//!
//! Solvers for `argmin_x 0.5 * ||x - y||^2 + sum_i r_i(x)` that only touch
//! each regularizer through its proximity operator. The crate provides the
//! operator trait, a few stock operators (identity, soft threshold, 1D
//! TV-Lp), and four combining schemes: alternating Dykstra, parallel
//! Dykstra, Douglas-Rachford, and consensus ADMM.

pub mod combine;
pub mod operator;

pub use combine::{combine_admm, combine_dr, combine_pd, combine_ppd};
pub use operator::{IdentityProx, ProxOperator, SoftThresholdProx, Tv1dProx};
