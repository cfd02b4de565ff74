use std::ops::Deref;
use std::time::Duration;

use crate::TvError;

/// An owned 1D sequence of finite samples, the input/output unit of every prox call.
///
/// Construction rejects NaN and infinities so the solvers never have to re-check,
/// and the length is fixed for the lifetime of the value.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    /// Wraps a sample vector, requiring at least one entry and all entries finite.
    pub fn new(values: Vec<f64>) -> Result<Self, TvError> {
        if values.is_empty() {
            return Err(TvError::InvalidParameter(
                "signal must contain at least one sample".into(),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(TvError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Never true (construction requires n >= 1); present for clippy's sake.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl Deref for Signal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Per-difference nonnegative penalties w_i (length n-1), with a uniform shorthand.
///
/// `Uniform(lambda)` stands for w_i = lambda at every edge without materializing
/// the vector. The representation is private so the nonnegativity invariant holds
/// by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    repr: WeightRepr,
}

#[derive(Clone, Debug, PartialEq)]
enum WeightRepr {
    Uniform(f64),
    PerEdge(Vec<f64>),
}

impl WeightVector {
    /// The uniform-penalty shorthand: every edge weight equals `lambda`.
    pub fn uniform(lambda: f64) -> Result<Self, TvError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(TvError::InvalidParameter(format!(
                "uniform weight must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self {
            repr: WeightRepr::Uniform(lambda),
        })
    }

    /// Explicit per-edge weights; each entry must be finite and nonnegative.
    pub fn per_edge(weights: Vec<f64>) -> Result<Self, TvError> {
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(TvError::NonFinite { index });
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(TvError::InvalidParameter(
                "edge weights must be nonnegative".into(),
            ));
        }
        Ok(Self {
            repr: WeightRepr::PerEdge(weights),
        })
    }

    /// Checks that this weight vector fits a signal of length `n`.
    pub fn check_len(&self, n: usize) -> Result<(), TvError> {
        match &self.repr {
            WeightRepr::Uniform(_) => Ok(()),
            WeightRepr::PerEdge(w) if w.len() == n.saturating_sub(1) => Ok(()),
            WeightRepr::PerEdge(w) => Err(TvError::LengthMismatch {
                expected: n.saturating_sub(1),
                got: w.len(),
            }),
        }
    }

    /// Weight of edge `i` (the difference x_{i+1} - x_i).
    pub fn get(&self, i: usize) -> f64 {
        match &self.repr {
            WeightRepr::Uniform(lambda) => *lambda,
            WeightRepr::PerEdge(w) => w[i],
        }
    }

    /// Some(lambda) when this is the uniform shorthand.
    pub fn as_uniform(&self) -> Option<f64> {
        match &self.repr {
            WeightRepr::Uniform(lambda) => Some(*lambda),
            WeightRepr::PerEdge(_) => None,
        }
    }

    /// Borrows the per-edge weights when they are stored explicitly.
    pub fn as_slice(&self) -> Option<&[f64]> {
        match &self.repr {
            WeightRepr::Uniform(_) => None,
            WeightRepr::PerEdge(w) => Some(w),
        }
    }

    /// Expands to a dense per-edge vector for a signal of length `n`.
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        match &self.repr {
            WeightRepr::Uniform(lambda) => vec![*lambda; n.saturating_sub(1)],
            WeightRepr::PerEdge(w) => w.clone(),
        }
    }
}

/// A dual iterate u of length n-1. The boundary entries u_0 = u_n = 0 of the dual
/// derivation are implicit and never stored.
///
/// Box feasibility |u_i| <= w_i is a query rather than a construction constraint
/// because some solvers (MSN in particular) visit infeasible iterates on purpose.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector {
    values: Vec<f64>,
}

impl DualVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Largest box-constraint violation max_i (|u_i| - w_i), clamped below at 0.
    pub fn max_box_violation(&self, w: &WeightVector) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &u)| (u.abs() - w.get(i)).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Whether every entry satisfies |u_i| <= w_i + tol.
    pub fn box_feasible(&self, w: &WeightVector, tol: f64) -> bool {
        self.max_box_violation(w) <= tol
    }
}

/// Tolerances and budgets shared by every solver in the workspace.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Duality-gap stopping tolerance for the iterative solvers.
    pub gap_tol: f64,
    /// Relative boundary tolerance for the MSN root finder: stop touching-boundary
    /// cases once | ||u||_2 - lambda | <= boundary_tol * lambda.
    pub boundary_tol: f64,
    /// Infinity-norm primal-change tolerance used by the combiner stopping rule.
    pub stop_tol: f64,
    /// Iteration cap for every iterative loop.
    pub max_iter: usize,
    /// Exponent S of the taut-string hybrid switch: the linearized method gets a
    /// budget of ceil(n^S) inner steps before the classic method takes over.
    pub hybrid_exponent: f64,
    /// Frank-Wolfe steps per gradient-projection step in the TV-Lp hybrid.
    pub fw_gp_ratio: usize,
    /// Worker threads for fiber-parallel work; 0 picks the runtime default.
    pub workers: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-5,
            boundary_tol: 1e-6,
            stop_tol: 1e-6,
            max_iter: 10_000,
            hybrid_exponent: 1.05,
            fw_gp_ratio: 10,
            workers: 0,
        }
    }
}

impl SolverOptions {
    /// Validates the invariants the solvers rely on.
    pub fn validate(&self) -> Result<(), TvError> {
        if !(self.gap_tol > 0.0) {
            return Err(TvError::InvalidParameter(format!(
                "gap_tol must be positive, got {}",
                self.gap_tol
            )));
        }
        if !(self.hybrid_exponent > 1.0 && self.hybrid_exponent < 2.0) {
            return Err(TvError::InvalidParameter(format!(
                "hybrid exponent must lie in (1, 2), got {}",
                self.hybrid_exponent
            )));
        }
        if self.fw_gp_ratio == 0 {
            return Err(TvError::InvalidParameter(
                "fw_gp_ratio must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What a solver did and how well it did it.
#[derive(Clone, Debug)]
pub struct SolverReport {
    /// Short label of the method that produced the result (hybrids report the
    /// branch actually taken).
    pub method: &'static str,
    /// Outer iterations (combiner rounds, Newton steps, GP/FW steps).
    pub iterations: usize,
    /// Method-specific work counter. For the taut-string solvers this counts
    /// main-loop executions including restarts (the O(n^2) diagnostic); for the
    /// Newton-type solvers it counts elementary-operation loop passes.
    pub inner_steps: u64,
    /// Final duality gap where the method computes one, else 0.
    pub duality_gap: f64,
    /// Final primal objective value.
    pub objective: f64,
    pub wall_time: Duration,
    /// False when an iteration cap was hit before the tolerance.
    pub converged: bool,
}

impl SolverReport {
    pub fn new(method: &'static str) -> Self {
        Self {
            method,
            iterations: 0,
            inner_steps: 0,
            duality_gap: 0.0,
            objective: 0.0,
            wall_time: Duration::ZERO,
            converged: true,
        }
    }
}
