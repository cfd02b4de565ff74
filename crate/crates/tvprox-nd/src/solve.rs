//! Fiber-parallel axis proxes and the multi-axis TV drivers built on them.
//!
//! An anisotropic tensor TV penalty is a sum of 1D TV terms, one per fiber
//! and axis. The prox of a single axis therefore splits into independent 1D
//! proxes over that axis's fibers, and the prox of the full sum is handled
//! by a splitting combiner whose blocks are exactly those axis proxes.
//!
//! Fibers are always traversed axis-major in ascending multi-index order
//! and reduced in that order, so results never depend on the worker count;
//! parallelism is across fibers, never inside one.

use std::time::Instant;

use rayon::prelude::*;

use tvprox_core::{Signal, SolverOptions, SolverReport, TvError, WeightVector};
use tvprox_1d::{
    prox_tv1d_l1_hybrid_inplace, prox_tv1d_l2_hybrid, prox_tv1d_linf, prox_tv1d_lp_hybrid,
};
use tvprox_combine::{combine_admm, combine_dr, combine_pd, combine_ppd, ProxOperator};

use crate::tensor::{decode_fiber_index, AxisSpec, TensorND};

/// Splitting scheme selector for the multi-axis drivers.
///
/// Row/column problems accept `Pd`, `Dr` (the documented default), and
/// `Admm`; sums over three or more axes accept `Ppd` (the default) and
/// `Admm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombinerKind {
    Pd,
    Ppd,
    Dr,
    Admm,
}

const ADMM_RHO: f64 = 1.0;

/// Inner 1D budgets for prox blocks driven by a combiner: far tighter than
/// the combiner's own stopping tolerance, so block errors stay invisible.
/// A certified duality gap g only pins the fiber solution to about sqrt(2g)
/// through strong convexity, so the gap floor here sits near the certificate's
/// own rounding scale; the combiner's movement test cannot pass below the
/// resulting position noise on curved-exponent axes.
fn inner_options(opts: &SolverOptions) -> SolverOptions {
    let mut inner = opts.clone();
    inner.workers = 0;
    inner.gap_tol = opts.gap_tol.min(1e-14);
    inner.max_iter = opts.max_iter.max(200_000);
    inner
}

fn validate_axis(x: &TensorND, k: usize, lambda: f64, p: f64) -> Result<(), TvError> {
    if k >= x.ndim() {
        return Err(TvError::InvalidParameter(format!(
            "axis {k} out of range for a {}-axis tensor",
            x.ndim()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "axis penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    if !(p >= 1.0) {
        return Err(TvError::InvalidParameter(format!(
            "axis norm exponent must satisfy p >= 1, got {p}"
        )));
    }
    Ok(())
}

fn fiber_failure(k: usize, dims: &[usize], c: usize, err: TvError) -> TvError {
    TvError::Internal(format!(
        "axis {k} fiber {:?}: {err}",
        decode_fiber_index(c, dims, k)
    ))
}

enum FiberWeights<'a> {
    Uniform(f64),
    PerFiber(&'a [f64]),
}

fn solve_fiber(
    chunk: &mut [f64],
    weights: &FiberWeights,
    p: f64,
    opts: &SolverOptions,
) -> Result<(), TvError> {
    let lambda = match weights {
        FiberWeights::Uniform(lambda) => *lambda,
        FiberWeights::PerFiber(_) => 1.0,
    };
    if chunk.len() <= 1 || lambda == 0.0 {
        return Ok(());
    }
    if p == 1.0 {
        let w = match weights {
            FiberWeights::Uniform(lambda) => WeightVector::uniform(*lambda)?,
            FiberWeights::PerFiber(ws) => WeightVector::per_edge(ws.to_vec())?,
        };
        prox_tv1d_l1_hybrid_inplace(chunk, &w, opts)?;
        return Ok(());
    }
    let y = Signal::new(chunk.to_vec())?;
    let (x, _) = if p == 2.0 {
        prox_tv1d_l2_hybrid(&y, lambda, opts)?
    } else if p.is_infinite() {
        prox_tv1d_linf(&y, lambda, opts)?
    } else {
        prox_tv1d_lp_hybrid(&y, lambda, p, opts)?
    };
    chunk.copy_from_slice(x.values());
    Ok(())
}

/// Optional dedicated pool honoring `opts.workers`; 0 means the ambient one.
struct Pool(Option<rayon::ThreadPool>);

impl Pool {
    fn build(workers: usize) -> Result<Self, TvError> {
        if workers == 0 {
            return Ok(Self(None));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map(|p| Self(Some(p)))
            .map_err(|e| TvError::Internal(format!("worker pool construction failed: {e}")))
    }

    fn run<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match &self.0 {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

fn axis_prox_impl(
    x: &TensorND,
    k: usize,
    weights: FiberWeightsTensor,
    p: f64,
    opts: &SolverOptions,
) -> Result<TensorND, TvError> {
    let m = x.ndim();
    let n_k = x.dims()[k];
    let mut perm: Vec<usize> = (0..m).filter(|&j| j != k).collect();
    perm.push(k);
    let mut moved = x.permute(&perm)?;
    let moved_weights = match &weights {
        FiberWeightsTensor::Uniform(_) => None,
        FiberWeightsTensor::PerFiber(w) => Some(w.permute(&perm)?),
    };
    let pool = Pool::build(opts.workers)?;
    let outcome: Result<(), (usize, TvError)> = pool.run(|| {
        let run_chunk = |(c, chunk): (usize, &mut [f64])| {
            let fw = match (&weights, &moved_weights) {
                (FiberWeightsTensor::Uniform(lambda), _) => FiberWeights::Uniform(*lambda),
                (_, Some(w)) => {
                    FiberWeights::PerFiber(&w.data()[c * (n_k - 1)..(c + 1) * (n_k - 1)])
                }
                _ => unreachable!(),
            };
            solve_fiber(chunk, &fw, p, opts).map_err(|e| (c, e))
        };
        moved
            .data_mut()
            .par_chunks_mut(n_k)
            .enumerate()
            .map(run_chunk)
            .collect()
    });
    if let Err((c, err)) = outcome {
        return Err(fiber_failure(k, x.dims(), c, err));
    }
    let mut inverse = vec![0usize; m];
    for (slot, &a) in perm.iter().enumerate() {
        inverse[a] = slot;
    }
    moved.permute(&inverse)
}

enum FiberWeightsTensor<'a> {
    Uniform(f64),
    PerFiber(&'a TensorND),
}

/// Applies the 1D TV-Lp prox with penalty `lambda` independently to every
/// fiber of `x` along axis `k`.
///
/// Fibers are dispatched to the worker pool and written back in place; the
/// output is deterministic and independent of the worker count. A fiber
/// solver failure is reported with the fiber's multi-index attached.
pub fn axis_prox(
    x: &TensorND,
    k: usize,
    lambda: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<TensorND, TvError> {
    opts.validate()?;
    validate_axis(x, k, lambda, p)?;
    if lambda == 0.0 {
        return Ok(x.clone());
    }
    axis_prox_impl(x, k, FiberWeightsTensor::Uniform(lambda), p, opts)
}

/// Weighted variant of `axis_prox` for `p = 1` axes: one nonnegative weight
/// per within-fiber difference, laid out as a tensor whose shape matches
/// `x` except that axis `k` shrinks by one.
pub fn axis_prox_weighted(
    x: &TensorND,
    k: usize,
    weights: &TensorND,
    opts: &SolverOptions,
) -> Result<TensorND, TvError> {
    opts.validate()?;
    validate_axis(x, k, 0.0, 1.0)?;
    if x.dims()[k] < 2 {
        return Err(TvError::InvalidParameter(
            "weighted axis prox needs fiber length at least 2".into(),
        ));
    }
    let mut expected = x.dims().to_vec();
    expected[k] -= 1;
    if weights.dims() != expected.as_slice() {
        return Err(TvError::LengthMismatch {
            expected: expected.iter().product(),
            got: weights.len(),
        });
    }
    if let Some(index) = weights.data().iter().position(|&w| w < 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "edge weight {index} is negative"
        )));
    }
    axis_prox_impl(x, k, FiberWeightsTensor::PerFiber(weights), 1.0, opts)
}

/// One axis prox packaged as a combiner block.
struct AxisOp {
    dims: Vec<usize>,
    k: usize,
    lambda: f64,
    p: f64,
    inner: SolverOptions,
}

impl ProxOperator for AxisOp {
    fn prox_scaled(&self, v: &[f64], scale: f64) -> Result<Vec<f64>, TvError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(TvError::InvalidParameter(format!(
                "prox scale must be finite and positive, got {scale}"
            )));
        }
        let t = TensorND::new(self.dims.clone(), v.to_vec())?;
        let out = axis_prox(&t, self.k, self.lambda * scale, self.p, &self.inner)?;
        Ok(out.into_data())
    }
}

fn wrap(dims: &[usize], flat: Vec<f64>, report: SolverReport) -> Result<(TensorND, SolverReport), TvError> {
    Ok((TensorND::new(dims.to_vec(), flat)?, report))
}

/// Row/column anisotropic TV prox of a 2D tensor.
///
/// `rows` penalizes differences inside each row (along axis 1) and `cols`
/// inside each column (along axis 0). The two axis proxes are combined by
/// the selected scheme; `Dr` is the recommended default, `Ppd` is reserved
/// for the N-D driver.
pub fn prox_tv2d(
    y: &TensorND,
    rows: (f64, f64),
    cols: (f64, f64),
    combiner: CombinerKind,
    opts: &SolverOptions,
) -> Result<(TensorND, SolverReport), TvError> {
    opts.validate()?;
    if y.ndim() != 2 {
        return Err(TvError::InvalidParameter(format!(
            "prox_tv2d needs a 2-axis tensor, got {} axes",
            y.ndim()
        )));
    }
    validate_axis(y, 1, rows.0, rows.1)?;
    validate_axis(y, 0, cols.0, cols.1)?;
    if combiner == CombinerKind::Ppd {
        return Err(TvError::InvalidParameter(
            "row/column problems combine with PD, DR, or ADMM".into(),
        ));
    }
    let pool = Pool::build(opts.workers)?;
    let inner = inner_options(opts);
    let r_rows = AxisOp {
        dims: y.dims().to_vec(),
        k: 1,
        lambda: rows.0,
        p: rows.1,
        inner: inner.clone(),
    };
    let r_cols = AxisOp {
        dims: y.dims().to_vec(),
        k: 0,
        lambda: cols.0,
        p: cols.1,
        inner: inner.clone(),
    };
    let mut combine_opts = opts.clone();
    combine_opts.workers = 0;
    let (flat, report) = pool.run(|| match combiner {
        CombinerKind::Pd => combine_pd(y.data(), &r_rows, &r_cols, &combine_opts),
        CombinerKind::Dr => combine_dr(y.data(), &r_rows, &r_cols, &combine_opts),
        CombinerKind::Admm => {
            let ops: [&dyn ProxOperator; 2] = [&r_rows, &r_cols];
            combine_admm(y.data(), &ops, ADMM_RHO, &combine_opts)
        }
        CombinerKind::Ppd => unreachable!(),
    })?;
    wrap(y.dims(), flat, report)
}

/// Anisotropic TV prox of an N-D tensor: one TV term per axis, with the
/// penalty and norm exponent taken from `spec`.
///
/// A single axis degenerates to one parallel fiber sweep; multi-axis sums
/// are combined with `Ppd` (the default choice) or `Admm`.
pub fn prox_tvnd(
    y: &TensorND,
    spec: &AxisSpec,
    combiner: CombinerKind,
    opts: &SolverOptions,
) -> Result<(TensorND, SolverReport), TvError> {
    opts.validate()?;
    let m = y.ndim();
    if spec.len() != m {
        return Err(TvError::LengthMismatch {
            expected: m,
            got: spec.len(),
        });
    }
    for (k, &(lambda, p)) in spec.pairs().iter().enumerate() {
        validate_axis(y, k, lambda, p)?;
    }
    if !matches!(combiner, CombinerKind::Ppd | CombinerKind::Admm) {
        return Err(TvError::InvalidParameter(
            "tensor sums combine with PPD or ADMM".into(),
        ));
    }
    if m == 1 {
        let clock = Instant::now();
        let (lambda, p) = spec.pair(0);
        let out = axis_prox(y, 0, lambda, p, opts)?;
        let mut report = SolverReport::new("sweep");
        report.iterations = 1;
        report.inner_steps = 1;
        report.wall_time = clock.elapsed();
        return Ok((out, report));
    }
    let pool = Pool::build(opts.workers)?;
    let inner = inner_options(opts);
    let blocks: Vec<AxisOp> = spec
        .pairs()
        .iter()
        .enumerate()
        .map(|(k, &(lambda, p))| AxisOp {
            dims: y.dims().to_vec(),
            k,
            lambda,
            p,
            inner: inner.clone(),
        })
        .collect();
    let ops: Vec<&dyn ProxOperator> = blocks.iter().map(|b| b as &dyn ProxOperator).collect();
    let mut combine_opts = opts.clone();
    combine_opts.workers = 0;
    let (flat, report) = pool.run(|| match combiner {
        CombinerKind::Ppd => combine_ppd(y.data(), &ops, &combine_opts),
        CombinerKind::Admm => combine_admm(y.data(), &ops, ADMM_RHO, &combine_opts),
        _ => unreachable!(),
    })?;
    wrap(y.dims(), flat, report)
}
