//! Multi-dimensional anisotropic total-variation proximity.
//!
//! The tensor TV penalty treated here is a sum of 1D TV terms over the
//! fibers of each axis. This crate supplies the tensor container, the
//! fiber-parallel single-axis prox, and 2D/N-D drivers that hand the axis
//! proxes to the splitting combiners.

pub mod solve;
pub mod tensor;

pub use solve::{axis_prox, axis_prox_weighted, prox_tv2d, prox_tvnd, CombinerKind};
pub use tensor::{AxisSpec, FiberView, TensorND};
