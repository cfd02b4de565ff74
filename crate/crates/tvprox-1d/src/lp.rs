//! TV-Lp proximity for exponents strictly between 1 and infinity, plus the
//! sup-norm case.
//!
//! The dual problem minimizes the same quadratic as the other TV duals but
//! over an lq ball, q = p/(p-1). Three iterative routes share that geometry:
//! projected gradient with the quarter stepsize, Frank-Wolfe with closed-form
//! extreme points, and an interleaved hybrid that takes a block of FW steps
//! followed by one GP correction. The ball projection itself is the crux: it
//! is computed through the Moreau split w = u - prox of the dual-norm penalty,
//! and that prox runs a projected Newton method whose Hessian is diagonal plus
//! rank one, so every inner iteration stays O(n).
//!
//! p = infinity swaps the lq ball for an l1 ball; its projection is the
//! classic soft-threshold rule located by a pivot search in expected linear
//! time.

use std::time::Instant;

use tvprox_core::{
    tv_objective, Signal, SolverOptions, SolverReport, TvError, WeightVector,
};

use crate::l1::check_finite;

/// Inner cap for the ball-projection Newton loop. The iteration is quadratic
/// near the optimum and stalls at machine precision long before this.
const PROJECTION_MAX_ITER: usize = 200;
/// Multiplier pinning threshold for the nonnegativity constraint of the prox.
const ACTIVE_EPS: f64 = 1e-12;
/// Sufficient-decrease fraction of the backtracking rule.
const PN_SIGMA: f64 = 0.05;
/// Below this stepsize the backtracking gives up on the direction.
const STEP_FLOOR: f64 = 1e-16;

/// lp norm with the peak magnitude scaled out so powf stays in range.
/// Accepts any p >= 1 including infinity.
fn lp_norm(v: &[f64], p: f64) -> f64 {
    let peak = v.iter().fold(0.0, |m: f64, &x| m.max(x.abs()));
    if peak == 0.0 || p.is_infinite() {
        return peak;
    }
    peak * v
        .iter()
        .map(|&x| (x.abs() / peak).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Primal point x = y - D^T u.
fn primal_at(y: &[f64], u: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut x = Vec::with_capacity(n);
    x.push(y[0] + u[0]);
    for i in 1..n - 1 {
        x.push(y[i] - u[i - 1] + u[i]);
    }
    x.push(y[n - 1] - u[n - 2]);
    x
}

/// Duality gap lambda*||Dx||_p - u.Dx at a ball-feasible dual point. Valid
/// for any p >= 1 including infinity; the dual feasibility is with respect to
/// the conjugate exponent.
fn gap_lp(u: &[f64], x: &[f64], lambda: f64, p: f64) -> f64 {
    let diffs: Vec<f64> = x.windows(2).map(|pair| pair[1] - pair[0]).collect();
    let pairing: f64 = u.iter().zip(&diffs).map(|(&uj, &dj)| uj * dj).sum();
    lambda * lp_norm(&diffs, p) - pairing
}

/// Dual objective 0.5*||D^T u||^2 - u.Dy, used by the monotonicity assertions.
#[cfg(debug_assertions)]
fn dual_objective(y: &[f64], u: &[f64]) -> f64 {
    let x = primal_at(y, u);
    let quad: f64 = y.iter().zip(&x).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let pairing: f64 = u
        .iter()
        .enumerate()
        .map(|(j, &uj)| uj * (y[j + 1] - y[j]))
        .sum();
    0.5 * quad - pairing
}

/// Diagonal-plus-rank-1 Hessian of the dual-norm prox objective at a point w
/// with ||w||_p > 0, stored through the quantities that make the inverse apply
/// a three-pass operation.
pub struct LpProxHessian {
    /// Rank-1 coefficient lambda*(1-p)/||w||_p; negative for p > 1.
    c: f64,
    /// Elementwise (w/||w||_p)^(p-1), the rank-1 factor.
    w_bar: Vec<f64>,
    /// Elementwise inverse of the diagonal 1 - c*(w/||w||_p)^(p-2).
    v: Vec<f64>,
}

impl LpProxHessian {
    /// Builds the factor at w. Coordinates must be nonnegative, and for p < 2
    /// strictly positive (zero coordinates make the diagonal singular; the
    /// prox solver keeps them out of the free set).
    pub fn new(w: &[f64], lambda: f64, p: f64) -> Result<Self, TvError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(TvError::InvalidParameter(format!(
                "Hessian exponent must be finite and exceed 1, got {p}"
            )));
        }
        let norm = lp_norm(w, p);
        if norm == 0.0 {
            return Err(TvError::InvalidParameter(
                "Hessian is undefined at the origin".into(),
            ));
        }
        if p < 2.0 && w.iter().any(|&wi| wi <= 0.0) {
            return Err(TvError::InvalidParameter(
                "zero coordinates make the p < 2 Hessian singular".into(),
            ));
        }
        let c = lambda * (1.0 - p) / norm;
        let mut w_bar = Vec::with_capacity(w.len());
        let mut v = Vec::with_capacity(w.len());
        for &wi in w {
            let hat = wi / norm;
            w_bar.push(hat.powf(p - 1.0));
            let diag = 1.0 - c * hat.powf(p - 2.0);
            v.push(if diag.is_finite() { 1.0 / diag } else { 0.0 });
        }
        Ok(Self { c, w_bar, v })
    }

    /// H x for the agreement tests: the diagonal part recovered from v plus
    /// the rank-1 term.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dot: f64 = self.w_bar.iter().zip(x).map(|(&b, &xi)| b * xi).sum();
        x.iter()
            .zip(self.v.iter().zip(&self.w_bar))
            .map(|(&xi, (&vi, &bi))| xi / vi + self.c * bi * dot)
            .collect()
    }

    /// H^{-1} g by the Sherman-Morrison rearrangement: V g minus the rank-1
    /// correction V w_bar scaled by (w_bar . V g) / (1/c + w_bar . V w_bar).
    pub fn apply_inverse(&self, g: &[f64]) -> Vec<f64> {
        let mut vg: Vec<f64> = self.v.iter().zip(g).map(|(&vi, &gi)| vi * gi).collect();
        let mut bar_vg = 0.0;
        let mut bar_vbar = 0.0;
        for i in 0..g.len() {
            bar_vg += self.w_bar[i] * vg[i];
            bar_vbar += self.w_bar[i] * self.v[i] * self.w_bar[i];
        }
        let denom = 1.0 / self.c + bar_vbar;
        if denom.is_finite() && denom != 0.0 {
            let coef = bar_vg / denom;
            for i in 0..g.len() {
                vg[i] -= self.v[i] * self.w_bar[i] * coef;
            }
        }
        vg
    }
}

/// Objective of the dual-norm prox subproblem, 0.5*||w-a||^2 + lambda*||w||_p.
fn prox_objective(w: &[f64], a: &[f64], lambda: f64, p: f64) -> f64 {
    let quad: f64 = w.iter().zip(a).map(|(&wi, &ai)| (wi - ai) * (wi - ai)).sum();
    0.5 * quad + lambda * lp_norm(w, p)
}

/// Sup norm of the first-order optimality violation of the prox subproblem:
/// the gradient on the support, its negative part on the pinned coordinates.
/// The prox objective is 1-strongly convex, so this residual also bounds the
/// distance to the exact minimizer.
fn prox_kkt_residual(w: &[f64], a: &[f64], lambda: f64, p: f64) -> f64 {
    let norm = lp_norm(w, p);
    if norm == 0.0 {
        return a.iter().fold(0.0, |m: f64, &ai| m.max(ai));
    }
    let mut res = 0.0f64;
    for (&wi, &ai) in w.iter().zip(a) {
        let g = wi - ai + lambda * (wi / norm).powf(p - 1.0);
        if wi > 0.0 {
            res = res.max(g.abs());
        } else {
            res = res.max(-g);
        }
    }
    res
}

/// Exact minimization of the prox objective over the ray {theta * w}.
///
/// The penalty gradient sees only the direction of w, so Newton steps scale
/// with the iterate's magnitude and cannot recover once a line-search
/// overshoot lands near the origin (the magnitudes would crawl back by a
/// tiny factor per iteration). The scale subproblem is a plain quadratic in
/// theta, so solving it exactly after every update keeps the magnitude
/// optimal for the current direction at O(n) cost and never increases the
/// objective. At a minimizer theta = 1 by Euler's identity, making this a
/// no-op there.
enum Radial {
    /// Magnitude moved to the ray optimum; the new objective value rides along.
    Scaled(f64),
    /// Already radially optimal to machine precision.
    Neutral,
    /// No positive magnitude improves this direction (or w has no mass):
    /// the iterate sits in the cone where only a direction change helps.
    Stuck,
}

fn radial_rescale(w: &mut [f64], a: &[f64], lambda: f64, p: f64) -> Radial {
    let mut dot = 0.0;
    let mut sq = 0.0;
    for (&wi, &ai) in w.iter().zip(a) {
        dot += wi * ai;
        sq += wi * wi;
    }
    if !(sq > 0.0) {
        return Radial::Stuck;
    }
    let theta = (dot - lambda * lp_norm(w, p)) / sq;
    if !(theta.is_finite() && theta > 0.0) {
        return Radial::Stuck;
    }
    if (theta - 1.0).abs() <= 1e-12 {
        return Radial::Neutral;
    }
    for wi in w.iter_mut() {
        *wi *= theta;
    }
    Radial::Scaled(prox_objective(w, a, lambda, p))
}

/// Radially optimal point on the Hoelder-equality ray of `a`.
///
/// The direction (a_i / max a)^(q-1) maximizes the inner product with `a`
/// over the unit p-ball, so whenever `a` lies outside the dual ball the ray
/// carries a strictly positive optimal magnitude and its objective sits
/// strictly below every near-origin point of any other direction. Restarting
/// here is what frees an iterate whose direction collapsed.
fn holder_ray_point(a: &[f64], lambda: f64, p: f64, q: f64) -> Option<(Vec<f64>, f64)> {
    let amax = a.iter().fold(0.0f64, |m, &ai| m.max(ai));
    if !(amax > 0.0) {
        return None;
    }
    let mut r: Vec<f64> = a.iter().map(|&ai| (ai / amax).powf(q - 1.0)).collect();
    let mut dot = 0.0;
    let mut sq = 0.0;
    for (&ri, &ai) in r.iter().zip(a) {
        dot += ri * ai;
        sq += ri * ri;
    }
    let theta = (dot - lambda * lp_norm(&r, p)) / sq;
    if !(theta.is_finite() && theta > 0.0) {
        return None;
    }
    for ri in r.iter_mut() {
        *ri *= theta;
    }
    let phi = prox_objective(&r, a, lambda, p);
    Some((r, phi))
}

/// One-dimensional re-entry of a clamped coordinate.
///
/// Along the restriction w_i = t with everything else held fixed, the slope
/// of the prox objective is t - a_i + lambda*(t/||w||_p)^(p-1), strictly
/// increasing in t, negative at zero (for a_i > 0) and positive at t = a_i,
/// so the coordinate's exact optimum is the bracketed root. Bisection finds
/// it to the last float; the root can sit many orders of magnitude below a_i
/// because the penalty slope grows like t^(p-1). Returns 0 when the root
/// falls below the smallest positive float.
fn reenter_root(rest_p: f64, ai: f64, lambda: f64, p: f64, ops: &mut u64) -> f64 {
    let slope = |t: f64| -> f64 {
        let norm = (rest_p + t.powf(p)).powf(1.0 / p);
        t - ai + lambda * (t / norm).powf(p - 1.0)
    };
    let mut lo = 0.0f64;
    let mut hi = ai;
    if slope(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..2048 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        *ops += 1;
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Projected Newton core for prox of lambda*||.||_p over w >= 0, a >= 0.
///
/// Runs Newton with the Sherman-Morrison inverse on the free coordinates and
/// an Armijo backtracking with quadratic interpolation, until the step stalls
/// at machine precision. Every accepted step is followed by the exact radial
/// rescale above. Zero coordinates with a positive data pull re-enter the
/// support through an exact one-dimensional solve rather than the Newton
/// direction, whose diagonal is singular at zero for p < 2.
fn prox_lp_nonneg(a: &[f64], lambda: f64, p: f64, ops: &mut u64) -> Vec<f64> {
    let n = a.len();
    let q = p / (p - 1.0);
    if lp_norm(a, q) <= lambda {
        return vec![0.0; n];
    }
    // Residual target: the gradient is a sum of terms on this scale, so its
    // rounding floor sits two orders below the target.
    let res_tol = 1e-14
        * (1.0 + lambda + a.iter().fold(0.0, |m: f64, &ai| m.max(ai)));
    let mut w = a.to_vec();
    let mut phi_w = prox_objective(&w, a, lambda, p);
    let mut frozen = vec![false; n];
    for _ in 0..PROJECTION_MAX_ITER {
        match radial_rescale(&mut w, a, lambda, p) {
            Radial::Scaled(phi) => {
                phi_w = phi;
                *ops += 4 * n as u64;
            }
            Radial::Neutral => {}
            Radial::Stuck => {
                // Only a direction change can help, and Newton's step length
                // shrinks with the iterate near the origin, so jump to the
                // Hoelder ray when that strictly lowers the objective.
                *ops += 4 * n as u64;
                if let Some((ray, phi)) = holder_ray_point(a, lambda, p, q) {
                    if phi < phi_w {
                        w = ray;
                        phi_w = phi;
                    }
                }
            }
        }
        let norm = lp_norm(&w, p);
        *ops += n as u64;
        if norm == 0.0 {
            // A total collapse is blocked inside the line search; restart
            // defensively if it ever slips through.
            w.copy_from_slice(a);
            phi_w = prox_objective(&w, a, lambda, p);
            continue;
        }
        let c = lambda * (1.0 - p) / norm;
        let mut grad = Vec::with_capacity(n);
        let mut w_bar = Vec::with_capacity(n);
        for &wi in &w {
            let bar = (wi / norm).powf(p - 1.0);
            w_bar.push(bar);
            grad.push(0.0);
        }
        let mut res = 0.0f64;
        for i in 0..n {
            let g = w[i] - a[i] + lambda * w_bar[i];
            grad[i] = g;
            res = res.max(if w[i] > 0.0 {
                g.abs()
            } else if frozen[i] {
                0.0
            } else {
                -g
            });
        }
        *ops += 2 * n as u64;
        if res <= res_tol {
            break;
        }

        // A clamped coordinate with a positive data pull always belongs to
        // the support: the penalty slope vanishes at zero for p > 1, so the
        // pull wins locally no matter how small it is. For p < 2 such a
        // coordinate must not ride along in the Newton line search (its
        // re-entry cost grows superlinearly with the step, capping the
        // Armijo step for the whole direction and stalling the free
        // coordinates), so it re-enters through the exact one-dimensional
        // solve instead. A root below the representable range means the
        // coordinate's true magnitude rounds to zero; it stays clamped and
        // stops counting toward the residual.
        if p < 2.0 {
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                if w[i] == 0.0 && !frozen[i] {
                    let pull = -grad[i];
                    if pull > res_tol && worst.is_none_or(|(_, b)| pull > b) {
                        worst = Some((i, pull));
                    }
                }
            }
            if let Some((i, _)) = worst {
                let rest_p: f64 = w.iter().map(|&wj| wj.powf(p)).sum();
                *ops += 2 * n as u64;
                let root = reenter_root(rest_p, a[i], lambda, p, ops);
                if root > 0.0 {
                    w[i] = root;
                    phi_w = prox_objective(&w, a, lambda, p);
                } else {
                    frozen[i] = true;
                }
                continue;
            }
        }

        // Direction: Newton on the free set, zero elsewhere. Clamped
        // coordinates with the right multiplier sign stay pinned; for p >= 2
        // the Newton diagonal is regular at zero, so re-entry candidates can
        // take the Newton component directly.
        let mut d = vec![0.0; n];
        let mut newton_idx = Vec::new();
        for i in 0..n {
            if w[i] > 0.0 || (p >= 2.0 && grad[i] <= ACTIVE_EPS) {
                newton_idx.push(i);
            }
        }
        if !newton_idx.is_empty() {
            let gf: Vec<f64> = newton_idx.iter().map(|&i| grad[i]).collect();
            // The factor sees only free coordinates but the norm quantities
            // are global; zero coordinates contribute nothing to them, so the
            // restriction is exact.
            let mut bar_f = Vec::with_capacity(newton_idx.len());
            let mut v_f = Vec::with_capacity(newton_idx.len());
            for &i in &newton_idx {
                bar_f.push(w_bar[i]);
                let diag = 1.0 - c * (w[i] / norm).powf(p - 2.0);
                v_f.push(if diag.is_finite() { 1.0 / diag } else { 0.0 });
            }
            let factor = LpProxHessian {
                c,
                w_bar: bar_f,
                v: v_f,
            };
            let df = factor.apply_inverse(&gf);
            for (k, &i) in newton_idx.iter().enumerate() {
                d[i] = df[k];
            }
            *ops += 4 * newton_idx.len() as u64;
        }

        // Slope of the descent step w - alpha*d, ignoring coordinates whose
        // component points out of the orthant and would be clamped away.
        let mut slope = 0.0;
        for i in 0..n {
            if !(w[i] <= 0.0 && d[i] > 0.0) {
                slope += grad[i] * d[i];
            }
        }
        if !(slope > 0.0) {
            break;
        }

        let mut alpha = 1.0f64;
        let mut accepted = None;
        loop {
            let raw: Vec<f64> = w.iter().zip(&d).map(|(&wi, &di)| wi - alpha * di).collect();
            let trial: Vec<f64> = raw.iter().map(|&t| t.max(0.0)).collect();
            let phi_trial = prox_objective(&trial, a, lambda, p);
            *ops += 3 * n as u64;
            let collapsed = trial.iter().all(|&t| t == 0.0);
            if !collapsed && phi_w - phi_trial >= PN_SIGMA * alpha * slope {
                accepted = Some((trial, phi_trial));
                break;
            }
            let phi_raw = prox_objective(&raw, a, lambda, p);
            let denom = 2.0 * (phi_w - phi_raw) + alpha * slope;
            let cand = alpha * alpha * slope / denom;
            alpha = if cand.is_finite() && cand > 0.0 && cand <= 0.9 * alpha {
                cand
            } else {
                0.5 * alpha
            };
            if alpha < STEP_FLOOR {
                break;
            }
        }
        let Some((next, phi_next)) = accepted else {
            // Near the optimum the objective decrease drops below the rounding
            // noise of the objective itself and Armijo cannot certify anything.
            // The optimality residual is still measurable there, so keep the
            // raw full Newton step if it contracts that residual; otherwise
            // the iterate is as converged as the arithmetic allows.
            let trial: Vec<f64> = w
                .iter()
                .zip(&d)
                .map(|(&wi, &di)| (wi - di).max(0.0))
                .collect();
            let res_trial = prox_kkt_residual(&trial, a, lambda, p);
            *ops += 3 * n as u64;
            if res_trial <= 0.9 * res {
                phi_w = prox_objective(&trial, a, lambda, p);
                w = trial;
                continue;
            }
            break;
        };
        w = next;
        phi_w = phi_next;
    }
    w
}

/// Projection core onto the lq ball of radius lambda; signs are stripped for
/// the dual-norm prox and restored on the way out.
fn project_lq_raw(u: &[f64], lambda: f64, q: f64, ops: &mut u64) -> Vec<f64> {
    if lp_norm(u, q) <= lambda {
        return u.to_vec();
    }
    let p = q / (q - 1.0);
    let mags: Vec<f64> = u.iter().map(|&x| x.abs()).collect();
    let shrunk = prox_lp_nonneg(&mags, lambda, p, ops);
    u.iter()
        .zip(&shrunk)
        .map(|(&ui, &si)| ui - ui.signum() * si)
        .collect()
}

/// Exact projection onto the lq-norm ball of radius `lambda`, q in (1, inf).
///
/// Feasible points pass through untouched. Infeasible points go through the
/// Moreau split: the projection equals u minus the prox of the conjugate-norm
/// penalty lambda*||.||_p at u, and that prox is solved to machine precision
/// by a projected Newton loop.
pub fn project_lq_ball(u: &Signal, lambda: f64, q: f64) -> Result<Signal, TvError> {
    check_finite(u.values())?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "ball radius must be finite and positive, got {lambda}"
        )));
    }
    if !(q.is_finite() && q > 1.0) {
        return Err(TvError::InvalidParameter(format!(
            "ball exponent must be finite and exceed 1, got {q}"
        )));
    }
    let mut ops = 0u64;
    Signal::new(project_lq_raw(u.values(), lambda, q, &mut ops))
}

/// Prox of lambda*||.||_p at a nonnegative point, p in (1, inf).
///
/// The minimizer of 0.5*||w-u||^2 + lambda*||w||_p over w >= 0, computed by
/// the projected Newton loop with the diagonal-plus-rank-1 inverse. Callers
/// with signed inputs strip magnitudes first and restore signs afterwards;
/// the zero coordinates of u stay exactly zero in the result.
pub fn prox_lp_norm_pn(u: &Signal, lambda: f64, p: f64) -> Result<Signal, TvError> {
    check_finite(u.values())?;
    if u.values().iter().any(|&x| x < 0.0) {
        return Err(TvError::InvalidParameter(
            "prox of the lp norm expects a nonnegative input".into(),
        ));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(TvError::InvalidParameter(format!(
            "norm exponent must be finite and exceed 1, got {p}"
        )));
    }
    if lambda == 0.0 {
        return Signal::new(u.values().to_vec());
    }
    let mut ops = 0u64;
    Signal::new(prox_lp_nonneg(u.values(), lambda, p, &mut ops))
}

/// Exact projection onto the l1 ball of radius `lambda` in expected O(n).
///
/// The soft threshold tau solving sum(max(|v_i| - tau, 0)) = lambda is located
/// by a three-way pivot partition (median of three, deterministic) instead of
/// a full sort; confirmed above-threshold mass accumulates across rounds so
/// each element is touched a geometrically shrinking number of times.
pub fn project_l1_ball(v: &[f64], lambda: f64) -> Vec<f64> {
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if total <= lambda {
        return v.to_vec();
    }
    if lambda <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let mut confirmed_sum = 0.0;
    let mut confirmed_count = 0usize;
    let mut lo = 0usize;
    let mut hi = mags.len();
    while lo < hi {
        let a = mags[lo];
        let b = mags[(lo + hi) / 2];
        let c = mags[hi - 1];
        let pivot = a.max(b).min(a.min(b).max(c));
        // Three-way partition: [lo..gt) > pivot, [gt..eq) == pivot, rest below.
        let mut gt = lo;
        let mut eq = lo;
        let mut below = hi;
        while eq < below {
            if mags[eq] > pivot {
                mags.swap(eq, gt);
                gt += 1;
                eq += 1;
            } else if mags[eq] < pivot {
                below -= 1;
                mags.swap(eq, below);
            } else {
                eq += 1;
            }
        }
        let seg_sum: f64 = mags[lo..eq].iter().sum();
        let seg_count = eq - lo;
        let excess =
            confirmed_sum + seg_sum - (confirmed_count + seg_count) as f64 * pivot;
        if excess < lambda {
            // Threshold sits below the pivot: everything at or above it stays.
            confirmed_sum += seg_sum;
            confirmed_count += seg_count;
            lo = eq;
        } else {
            // Threshold is at least the pivot: equals and below drop out.
            hi = gt;
        }
    }
    let tau = ((confirmed_sum - lambda) / confirmed_count as f64).max(0.0);
    v.iter()
        .map(|&x| x.signum() * (x.abs() - tau).max(0.0))
        .collect()
}

/// Frank-Wolfe extreme point of the lq ball against the gradient z: the
/// magnitudes follow |z|^(p-1), signs oppose z, and the result is rescaled to
/// sit on the sphere ||s||_q = lambda.
fn fw_vertex(z: &[f64], lambda: f64, p: f64) -> Vec<f64> {
    let q = p / (p - 1.0);
    let peak = z.iter().fold(0.0, |m: f64, &x| m.max(x.abs()));
    if peak == 0.0 {
        return vec![0.0; z.len()];
    }
    let mut s: Vec<f64> = z
        .iter()
        .map(|&zi| -zi.signum() * (zi.abs() / peak).powf(p - 1.0))
        .collect();
    let norm = lp_norm(&s, q);
    let scale = lambda / norm;
    for si in &mut s {
        *si *= scale;
    }
    s
}

fn identity_report_lp(
    y: &Signal,
    lambda: f64,
    p: f64,
    method: &'static str,
    clock: Instant,
) -> Result<(Signal, SolverReport), TvError> {
    let x = y.values().to_vec();
    let mut report = SolverReport::new(method);
    report.objective = tv_objective(&x, y.values(), &WeightVector::uniform(lambda)?, p)?;
    report.converged = true;
    report.wall_time = clock.elapsed();
    Ok((Signal::new(x)?, report))
}

fn validate_lp(y: &Signal, lambda: f64, p: f64, opts: &SolverOptions) -> Result<(), TvError> {
    opts.validate()?;
    check_finite(y.values())?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "lp penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    if p.is_nan() || p <= 1.0 {
        return Err(TvError::InvalidParameter(format!(
            "TV-Lp exponent must exceed 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Err(TvError::InvalidParameter(
            "p = infinity is served by prox_tv1d_linf".into(),
        ));
    }
    Ok(())
}

/// Gradient projection for the TV-Lp prox, 1 < p < infinity.
///
/// The quarter stepsize carries over from the l2 case unchanged because the
/// dual Hessian DD^T does not depend on the norm; only the feasible ball
/// does. Iterates stay feasible, so the duality gap certifies stopping.
/// Expect stalls in the large-penalty band; the hybrid covers that regime.
pub fn prox_tv1d_lp_gp(
    y: &Signal,
    lambda: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    validate_lp(y, lambda, p, opts)?;
    let clock = Instant::now();
    let n = y.len();
    if n <= 1 || lambda == 0.0 {
        return identity_report_lp(y, lambda, p, "gp", clock);
    }
    let yv = y.values();
    let q = p / (p - 1.0);
    let mut report = SolverReport::new("gp");
    let mut ops: u64 = 0;
    let mut u = vec![0.0; n - 1];
    let mut x = primal_at(yv, &u);
    loop {
        let gap = gap_lp(&u, &x, lambda, p);
        ops += 2 * n as u64;
        report.duality_gap = gap;
        if gap <= opts.gap_tol {
            report.converged = true;
            break;
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            break;
        }
        report.iterations += 1;
        let v: Vec<f64> = (0..n - 1)
            .map(|j| u[j] + 0.25 * (x[j + 1] - x[j]))
            .collect();
        u = project_lq_raw(&v, lambda, q, &mut ops);
        x = primal_at(yv, &u);
        ops += 3 * n as u64;
    }
    report.inner_steps = ops;
    report.objective = tv_objective(&x, yv, &WeightVector::uniform(lambda)?, p)?;
    report.wall_time = clock.elapsed();
    Ok((Signal::new(x)?, report))
}

/// Frank-Wolfe direction subproblem at the current dual iterate: the extreme
/// point of the ball against the gradient, plus the surrogate gap (u - s).z.
/// For this quadratic the surrogate coincides with the true duality gap up to
/// rounding, since the linear minimization evaluates the support function of
/// the ball exactly.
fn fw_direction(u: &[f64], x: &[f64], lambda: f64, p: f64, ops: &mut u64) -> (f64, Vec<f64>) {
    let m = u.len();
    let z: Vec<f64> = (0..m).map(|j| x[j] - x[j + 1]).collect();
    let s = fw_vertex(&z, lambda, p);
    let mut surrogate = 0.0;
    for j in 0..m {
        surrogate += (u[j] - s[j]) * z[j];
    }
    *ops += 4 * (m as u64 + 1);
    (surrogate, s)
}

/// Advances the dual iterate toward the Frank-Wolfe vertex by the exact line
/// search of the dual quadratic, clamped into [0, 1]. The numerator -d.grad
/// is the surrogate gap measured when the vertex was found.
fn fw_advance(
    yv: &[f64],
    u: &mut [f64],
    x: &mut Vec<f64>,
    s: &[f64],
    surrogate: f64,
    ops: &mut u64,
) {
    let n = yv.len();
    let d: Vec<f64> = s.iter().zip(u.iter()).map(|(&sj, &uj)| sj - uj).collect();
    // Curvature d.DD^T d as the squared norm of D^T d.
    let mut denom = d[0] * d[0] + d[d.len() - 1] * d[d.len() - 1];
    for pair in d.windows(2) {
        let t = pair[0] - pair[1];
        denom += t * t;
    }
    *ops += 2 * n as u64;
    if denom <= 0.0 || surrogate <= 0.0 {
        return;
    }
    let gamma = (surrogate / denom).clamp(0.0, 1.0);
    for (uj, dj) in u.iter_mut().zip(&d) {
        *uj += gamma * dj;
    }
    *x = primal_at(yv, u);
    *ops += 2 * n as u64;
}

/// Frank-Wolfe for the TV-Lp prox, 1 < p < infinity.
///
/// Every iterate is a convex combination of ball extreme points, hence
/// feasible. The surrogate gap from the direction subproblem is checked
/// first; only when it clears the tolerance is the true duality gap computed
/// and required to clear it too.
pub fn prox_tv1d_lp_fw(
    y: &Signal,
    lambda: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    validate_lp(y, lambda, p, opts)?;
    let clock = Instant::now();
    let n = y.len();
    if n <= 1 || lambda == 0.0 {
        return identity_report_lp(y, lambda, p, "fw", clock);
    }
    let yv = y.values();
    let mut report = SolverReport::new("fw");
    let mut ops: u64 = 0;
    let mut u = vec![0.0; n - 1];
    let mut x = yv.to_vec();
    loop {
        let (surrogate, s) = fw_direction(&u, &x, lambda, p, &mut ops);
        if surrogate <= opts.gap_tol {
            let gap = gap_lp(&u, &x, lambda, p);
            ops += 2 * n as u64;
            report.duality_gap = gap;
            if gap <= opts.gap_tol {
                report.converged = true;
                break;
            }
        }
        if report.iterations >= opts.max_iter {
            report.duality_gap = gap_lp(&u, &x, lambda, p);
            report.converged = false;
            break;
        }
        report.iterations += 1;
        fw_advance(yv, &mut u, &mut x, &s, surrogate, &mut ops);
    }
    report.inner_steps = ops;
    report.objective = tv_objective(&x, yv, &WeightVector::uniform(lambda)?, p)?;
    report.wall_time = clock.elapsed();
    Ok((Signal::new(x)?, report))
}

/// Interleaved Frank-Wolfe / gradient-projection solver for the TV-Lp prox.
///
/// Takes `opts.fw_gp_ratio` FW steps, then one GP step, and repeats. The FW
/// block makes cheap global progress when the ball constraint is slack and
/// the GP step supplies the local contraction FW lacks on the boundary, so
/// the pair certifies across penalty bands where either one alone stalls.
/// Both step kinds decrease the dual objective; debug builds assert it.
pub fn prox_tv1d_lp_hybrid(
    y: &Signal,
    lambda: f64,
    p: f64,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    validate_lp(y, lambda, p, opts)?;
    let clock = Instant::now();
    let n = y.len();
    if n <= 1 || lambda == 0.0 {
        return identity_report_lp(y, lambda, p, "hybrid", clock);
    }
    let yv = y.values();
    let q = p / (p - 1.0);
    let mut report = SolverReport::new("hybrid");
    let mut ops: u64 = 0;
    let mut u = vec![0.0; n - 1];
    let mut x = yv.to_vec();
    #[cfg(debug_assertions)]
    let mut phi_prev = dual_objective(yv, &u);
    let mut cycle = 0usize;
    loop {
        let gap = gap_lp(&u, &x, lambda, p);
        ops += 2 * n as u64;
        report.duality_gap = gap;
        if gap <= opts.gap_tol {
            report.converged = true;
            break;
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            break;
        }
        report.iterations += 1;
        if cycle < opts.fw_gp_ratio {
            let (surrogate, s) = fw_direction(&u, &x, lambda, p, &mut ops);
            fw_advance(yv, &mut u, &mut x, &s, surrogate, &mut ops);
            cycle += 1;
        } else {
            let v: Vec<f64> = (0..n - 1)
                .map(|j| u[j] + 0.25 * (x[j + 1] - x[j]))
                .collect();
            u = project_lq_raw(&v, lambda, q, &mut ops);
            x = primal_at(yv, &u);
            ops += 3 * n as u64;
            cycle = 0;
        }
        #[cfg(debug_assertions)]
        {
            let phi = dual_objective(yv, &u);
            debug_assert!(
                phi <= phi_prev + 1e-9 * (1.0 + phi_prev.abs()),
                "hybrid step raised the dual objective from {phi_prev} to {phi}"
            );
            phi_prev = phi;
        }
    }
    report.inner_steps = ops;
    report.objective = tv_objective(&x, yv, &WeightVector::uniform(lambda)?, p)?;
    report.wall_time = clock.elapsed();
    Ok((Signal::new(x)?, report))
}

/// Gradient projection for the TV-Linf prox.
///
/// The dual ball becomes an l1 ball, projected by the pivot rule; everything
/// else matches the finite-p gradient projection, including the quarter
/// stepsize and the gap certificate (with the sup norm on the primal side).
pub fn prox_tv1d_linf(
    y: &Signal,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    opts.validate()?;
    check_finite(y.values())?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "linf penalty must be finite and nonnegative, got {lambda}"
        )));
    }
    let clock = Instant::now();
    let n = y.len();
    if n <= 1 || lambda == 0.0 {
        return identity_report_lp(y, lambda, f64::INFINITY, "gp", clock);
    }
    let yv = y.values();
    let mut report = SolverReport::new("gp");
    let mut ops: u64 = 0;
    let mut u = vec![0.0; n - 1];
    let mut x = primal_at(yv, &u);
    loop {
        let gap = gap_lp(&u, &x, lambda, f64::INFINITY);
        ops += 2 * n as u64;
        report.duality_gap = gap;
        if gap <= opts.gap_tol {
            report.converged = true;
            break;
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            break;
        }
        report.iterations += 1;
        let v: Vec<f64> = (0..n - 1)
            .map(|j| u[j] + 0.25 * (x[j + 1] - x[j]))
            .collect();
        u = project_l1_ball(&v, lambda);
        x = primal_at(yv, &u);
        ops += 5 * n as u64;
    }
    report.inner_steps = ops;
    report.objective = tv_objective(&x, yv, &WeightVector::uniform(lambda)?, f64::INFINITY)?;
    report.wall_time = clock.elapsed();
    Ok((Signal::new(x)?, report))
}
