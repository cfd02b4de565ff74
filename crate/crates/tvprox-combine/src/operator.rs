//! Proximity-operator abstraction consumed by the splitting combiners.
//!
//! A combiner only ever touches its regularizers through prox evaluations,
//! so the trait is a single method. The method takes a `scale` factor and
//! must solve for `scale * r` rather than `r` itself: the product-space
//! combiners do not evaluate the prox of each term at unit weight (parallel
//! Dykstra needs the prox of `m * r_i`, ADMM the prox of `r_i / rho`), and
//! folding the factor into the operator lets exact solvers stay exact
//! instead of wrapping them in an outer iteration.

use tvprox_core::{Signal, SolverOptions, SolverReport, TvError, WeightVector};
use tvprox_1d::{prox_tv1d_l1_hybrid, prox_tv1d_l2_hybrid, prox_tv1d_linf, prox_tv1d_lp_hybrid};

/// A proximity operator for one regularizer term.
///
/// Implementations must be `Sync`: the parallel combiners evaluate the
/// blocks of one iteration concurrently, and must be reentrant, since one
/// operator instance may be shared across iterations and worker threads.
pub trait ProxOperator: Sync {
    /// Evaluates `argmin_x 0.5 * ||x - v||^2 + scale * r(x)`.
    ///
    /// `scale` is a positive multiplier supplied by the combiner. Inputs are
    /// taken as raw slices so callers can hand over internal iterates
    /// without wrapping them.
    fn prox_scaled(&self, v: &[f64], scale: f64) -> Result<Vec<f64>, TvError>;

    /// Evaluates the prox at unit scale.
    fn prox(&self, v: &[f64]) -> Result<Vec<f64>, TvError> {
        self.prox_scaled(v, 1.0)
    }
}

fn check_scale(scale: f64) -> Result<(), TvError> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(TvError::InvalidParameter(format!(
            "prox scale must be finite and positive, got {scale}"
        )))
    }
}

/// The zero regularizer; its prox is the identity map.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityProx;

impl ProxOperator for IdentityProx {
    fn prox_scaled(&self, v: &[f64], scale: f64) -> Result<Vec<f64>, TvError> {
        check_scale(scale)?;
        Ok(v.to_vec())
    }
}

/// Elementwise l1 penalty `tau * sum_i |x_i|`, solved by soft thresholding.
#[derive(Debug, Clone, Copy)]
pub struct SoftThresholdProx {
    pub tau: f64,
}

impl SoftThresholdProx {
    pub fn new(tau: f64) -> Self {
        Self { tau }
    }
}

impl ProxOperator for SoftThresholdProx {
    fn prox_scaled(&self, v: &[f64], scale: f64) -> Result<Vec<f64>, TvError> {
        check_scale(scale)?;
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(TvError::InvalidParameter(format!(
                "soft threshold must be finite and nonnegative, got {}",
                self.tau
            )));
        }
        let t = self.tau * scale;
        Ok(v.iter()
            .map(|&vi| vi.signum() * (vi.abs() - t).max(0.0))
            .collect())
    }
}

/// Weighted 1D TV-Lp penalty over the whole vector.
///
/// Dispatches to the direct taut-string solver for `p = 1` and to the
/// certified iterative solvers otherwise. The inner tolerances default far
/// below the combiner stopping tolerance so prox errors never dominate the
/// splitting error; override them through `with_options` when a caller
/// wants to trade accuracy for speed.
#[derive(Debug, Clone)]
pub struct Tv1dProx {
    pub lambda: f64,
    pub p: f64,
    opts: SolverOptions,
}

impl Tv1dProx {
    pub fn new(lambda: f64, p: f64) -> Self {
        let mut opts = SolverOptions::default();
        opts.gap_tol = 1e-11;
        opts.max_iter = 200_000;
        Self { lambda, p, opts }
    }

    pub fn with_options(mut self, opts: SolverOptions) -> Self {
        self.opts = opts;
        self
    }

    fn solve(&self, v: &[f64], scale: f64) -> Result<(Signal, SolverReport), TvError> {
        let lambda = self.lambda * scale;
        let y = Signal::new(v.to_vec())?;
        if self.p == 1.0 {
            let w = WeightVector::uniform(lambda)?;
            prox_tv1d_l1_hybrid(&y, &w, &self.opts)
        } else if self.p == 2.0 {
            prox_tv1d_l2_hybrid(&y, lambda, &self.opts)
        } else if self.p.is_infinite() && self.p > 0.0 {
            prox_tv1d_linf(&y, lambda, &self.opts)
        } else {
            prox_tv1d_lp_hybrid(&y, lambda, self.p, &self.opts)
        }
    }
}

impl ProxOperator for Tv1dProx {
    fn prox_scaled(&self, v: &[f64], scale: f64) -> Result<Vec<f64>, TvError> {
        check_scale(scale)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(TvError::InvalidParameter(format!(
                "TV penalty must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if v.is_empty() {
            return Ok(Vec::new());
        }
        let (x, _) = self.solve(v, scale)?;
        Ok(x.into_vec())
    }
}
