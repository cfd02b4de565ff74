//! Taut-string solvers for 1D TV-L1 proximity.
//!
//! The problem min_x 0.5||x - y||^2 + sum_i w_i |x_{i+1} - x_i| is solved
//! exactly by threading a taut string through a tube around the cumulative
//! sum r of y: the tube has halfwidth w_i at interior position i, and the
//! string is pinned to r at both ends. The solution is the sequence of string
//! slopes. Three routes are provided:
//!
//! * `classic`: full hull bookkeeping with a guaranteed linear runtime,
//! * `linearized`: affine hull approximations, a very fast single pass that
//!   restarts from scratch at every fixed breakpoint (quadratic worst case),
//! * `hybrid`: the linearized pass under a step budget of ceil(n^S), with the
//!   classic method finishing whatever suffix remains.
//!
//! Zero-weight edges pinch the tube shut, which decouples the two sides; all
//! entry points split the signal at such edges and solve the pieces
//! independently.

use std::time::Instant;

use tvprox_core::{
    dual_gap_l1, tv_objective, Signal, SolverOptions, SolverReport, TvError, WeightVector,
};

use crate::deque::{Segment, SegmentDeque};

/// Borrowed weights for one component of the signal.
#[derive(Clone, Copy)]
pub(crate) enum WeightView<'a> {
    Uniform(f64),
    PerEdge(&'a [f64]),
}

impl<'a> WeightView<'a> {
    #[inline]
    fn edge(&self, j: usize) -> f64 {
        match self {
            WeightView::Uniform(l) => *l,
            WeightView::PerEdge(w) => w[j],
        }
    }

    /// Tube halfwidth at position step+1. The final position is pinned to the
    /// cumulative sum, hence width zero there.
    #[inline]
    fn halfwidth(&self, step: usize, n: usize) -> f64 {
        if step + 1 < n {
            self.edge(step)
        } else {
            0.0
        }
    }

    fn tail(&self, from: usize) -> WeightView<'a> {
        match self {
            WeightView::Uniform(l) => WeightView::Uniform(*l),
            WeightView::PerEdge(w) => WeightView::PerEdge(&w[from..]),
        }
    }
}

/// Where an interrupted linearized pass stopped: the last breakpoint it fixed.
struct Unfinished {
    /// Tube position of the anchor; also the first output index still unset.
    anchor: usize,
    /// Height of the anchor relative to the tube center: +w when the string
    /// bent on the ceiling, -w on the floor, 0 at the start of the signal.
    offset: f64,
}

/// Bookkeeping of the linearized pass between two breakpoints: the anchor the
/// current segment grows from, the two candidate lines, their heights at the
/// last processed position (relative to the tube center), and the positions
/// where each line last touched its boundary.
///
/// Away from a violation the heights satisfy `h_major >= -halfwidth` and
/// `h_minor <= halfwidth`, and both touch marks lie between the anchor and
/// the current position; the corrections in the main loop restore all of
/// these right after each advance.
struct LinearizedState {
    anchor: usize,
    offset: f64,
    /// Smallest affine majorant of the tube floor, leaving the anchor.
    slope_major: f64,
    h_major: f64,
    break_major: usize,
    /// Greatest affine minorant of the tube ceiling, leaving the anchor.
    slope_minor: f64,
    h_minor: f64,
    break_minor: usize,
}

impl LinearizedState {
    /// Fresh state at the start of the signal: the anchor sits on the tube
    /// center and nothing has been processed, so both heights are zero.
    fn start(buf: &[f64], w: WeightView<'_>) -> Self {
        let half = w.halfwidth(0, buf.len());
        LinearizedState {
            anchor: 0,
            offset: 0.0,
            slope_major: buf[0] - half,
            h_major: 0.0,
            break_major: 0,
            slope_minor: buf[0] + half,
            h_minor: 0.0,
            break_minor: 0,
        }
    }

    /// State right after a bend at `anchor`: both lines leave the anchor
    /// point (`offset` away from the tube center) and touch their boundary at
    /// the next position, so the heights there equal the halfwidth exactly.
    /// Assigning them directly keeps restarts free of rounding residue; a
    /// stray epsilon against a zero-width final position would otherwise fake
    /// a break. The caller resumes the scan at `anchor + 1`.
    fn anchored(buf: &[f64], w: WeightView<'_>, anchor: usize, offset: f64) -> Self {
        let half = w.halfwidth(anchor, buf.len());
        LinearizedState {
            anchor,
            offset,
            slope_major: buf[anchor] - half - offset,
            h_major: -half,
            break_major: anchor,
            slope_minor: buf[anchor] + half - offset,
            h_minor: half,
            break_minor: anchor,
        }
    }
}

/// Linearized taut-string pass, in place over `buf`.
///
/// Keeps only two affine hulls: the smallest affine majorant of the tube
/// bottom (slope_major, h_major, touching the bottom last at break_major) and
/// the greatest affine minorant of the tube ceiling (slope_minor, h_minor,
/// break_minor). Heights are relative to the tube center. When the majorant
/// pokes above the ceiling or the minorant dives under the floor no straight
/// segment can continue, so a stretch of the solution is emitted up to the
/// hull's last tube contact and the pass restarts from scratch there.
///
/// `budget` caps the number of main-loop executions across restarts. When it
/// runs out the function stops at the last fixed breakpoint and returns it;
/// `buf[anchor..]` then still holds input samples.
fn linearized_core(
    buf: &mut [f64],
    w: WeightView<'_>,
    budget: u64,
    inner_steps: &mut u64,
) -> Option<Unfinished> {
    let n = buf.len();
    if n <= 1 {
        return None;
    }

    let mut st = LinearizedState::start(buf, w);
    let mut i = 0usize;

    while i < n {
        if *inner_steps >= budget {
            return Some(Unfinished {
                anchor: st.anchor,
                offset: st.offset,
            });
        }
        *inner_steps += 1;
        let half = w.halfwidth(i, n);

        // Follow the majorant of the tube floor one position further.
        st.h_major += st.slope_major - buf[i];
        if st.h_major > half {
            // Even the shallowest feasible line exits through the ceiling:
            // bend downward at the majorant's last floor contact.
            let slope = st.slope_major;
            for v in &mut buf[st.anchor..=st.break_major] {
                *v = slope;
            }
            let anchor = st.break_major + 1;
            let offset = -w.halfwidth(anchor - 1, n);
            st = LinearizedState::anchored(buf, w, anchor, offset);
            i = anchor + 1;
            continue;
        }

        // Follow the minorant of the tube ceiling.
        st.h_minor += st.slope_minor - buf[i];
        if st.h_minor < -half {
            // The steepest feasible line dives under the floor: bend upward
            // at the minorant's last ceiling contact.
            let slope = st.slope_minor;
            for v in &mut buf[st.anchor..=st.break_minor] {
                *v = slope;
            }
            let anchor = st.break_minor + 1;
            let offset = w.halfwidth(anchor - 1, n);
            st = LinearizedState::anchored(buf, w, anchor, offset);
            i = anchor + 1;
            continue;
        }

        // Pull the majorant back down onto the floor when it drifted below,
        // and the minorant back up onto the ceiling; a touch moves the mark.
        if st.h_major <= -half {
            st.slope_major += (-half - st.h_major) / (i + 1 - st.anchor) as f64;
            st.h_major = -half;
            st.break_major = i;
        }
        if st.h_minor >= half {
            st.slope_minor += (half - st.h_minor) / (i + 1 - st.anchor) as f64;
            st.h_minor = half;
            st.break_minor = i;
        }
        debug_assert!(st.h_major >= -half && st.h_minor <= half);
        debug_assert!((st.anchor..=i).contains(&st.break_major));
        debug_assert!((st.anchor..=i).contains(&st.break_minor));
        i += 1;
    }

    // The whole tube was traversed: the final position has width zero, so
    // both lines ended as the chord to the pinned endpoint.
    let slope = st.slope_major;
    for v in &mut buf[st.anchor..] {
        *v = slope;
    }
    None
}

/// Classic taut-string pass with full hull bookkeeping, in place over `buf`.
///
/// `extra` shifts the first sample: the effective input is
/// (buf[0] - extra, buf[1], ...). The hybrid uses this to hand over a suffix
/// whose anchor sits on the tube boundary instead of the center; everyone
/// else passes 0.
fn classic_core(buf: &mut [f64], extra: f64, w: WeightView<'_>, inner_steps: &mut u64) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    if n == 1 {
        buf[0] -= extra;
        *inner_steps += 1;
        return;
    }

    // Concave majorant of the tube bottom and convex minorant of the ceiling,
    // both growing rightward from the current anchor of the string.
    let mut major = SegmentDeque::new(n);
    let mut minor = SegmentDeque::new(n);

    let mut r = -extra; // running cumulative sum of the effective input
    let mut anchor_pos = 0usize;
    let mut anchor_val = 0.0f64;
    // Latest raw tube points; the hulls always end on them. Their position is
    // the current p, so only the heights need tracking.
    let mut last_bot = 0.0f64;
    let mut last_ceil = 0.0f64;

    for p in 1..=n {
        *inner_steps += 1;
        r += buf[p - 1];
        let half = if p < n { w.edge(p - 1) } else { 0.0 };
        let bot = r - half;
        let ceil = r + half;

        push_hull(&mut major, bot - last_bot, true);
        last_bot = bot;
        push_hull(&mut minor, ceil - last_ceil, false);
        last_ceil = ceil;

        // While the hulls cross no straight continuation exists; fix string
        // segments at the leftmost tube contact until they separate.
        while !major.is_empty()
            && !minor.is_empty()
            && major.front().slope > minor.front().slope
        {
            let major_touch = anchor_pos + major.front().x_span;
            let minor_touch = anchor_pos + minor.front().x_span;
            if minor_touch <= major_touch {
                // Bend upward on the ceiling contact.
                let seg = *minor.front();
                for v in &mut buf[anchor_pos..minor_touch] {
                    *v = seg.slope;
                }
                anchor_pos = minor_touch;
                anchor_val += seg.y_rise;
                minor.pop_front();
                collapse_to_chord(&mut major, p - anchor_pos, anchor_val, &mut last_bot);
            } else {
                // Bend downward on the bottom contact.
                let seg = *major.front();
                for v in &mut buf[anchor_pos..major_touch] {
                    *v = seg.slope;
                }
                anchor_pos = major_touch;
                anchor_val += seg.y_rise;
                major.pop_front();
                collapse_to_chord(&mut minor, p - anchor_pos, anchor_val, &mut last_ceil);
            }
        }
    }

    // The rest of the string is the straight chord to the pinned endpoint.
    if anchor_pos < n {
        let slope = (r - anchor_val) / ((n - anchor_pos) as f64);
        for v in &mut buf[anchor_pos..] {
            *v = slope;
        }
    }
}

/// Appends a unit-span rise to a hull and restores concavity (majorant) or
/// convexity (minorant) by merging from the tail.
pub(crate) fn push_hull(hull: &mut SegmentDeque, rise: f64, concave: bool) {
    hull.push_back(Segment::new(1, rise));
    while hull.len() >= 2 {
        let last = hull.back().slope;
        let prev = hull.penultimate().slope;
        let violates = if concave { last >= prev } else { last <= prev };
        if !violates {
            break;
        }
        hull.merge_back_pair();
    }
}

/// After a bend, the opposite hull restarts as the single chord from the new
/// anchor to its latest tube point. When the bend happened at the current
/// position the chord is empty and the hull simply restarts from the anchor.
fn collapse_to_chord(hull: &mut SegmentDeque, span: usize, anchor_val: f64, last_val: &mut f64) {
    if span == 0 {
        hull.clear();
        *last_val = anchor_val;
    } else {
        hull.reset_chord(Segment::new(span, *last_val - anchor_val));
    }
}

/// Linearized pass under a budget with a classic finish for the remainder.
fn hybrid_core(buf: &mut [f64], w: WeightView<'_>, budget: u64, inner_steps: &mut u64) {
    if let Some(Unfinished { anchor, offset }) = linearized_core(buf, w, budget, inner_steps) {
        let tail_w = w.tail(anchor);
        classic_core(&mut buf[anchor..], offset, tail_w, inner_steps);
    }
}

#[derive(Clone, Copy)]
enum Method {
    Classic,
    Linearized,
    Hybrid,
}

/// Runs `core` on each stretch between zero-weight edges. A zero weight
/// pinches the tube shut, pinning the string to the cumulative sum there, so
/// the two sides decouple into independent subproblems.
fn run_split(
    buf: &mut [f64],
    w: &WeightVector,
    mut core: impl FnMut(&mut [f64], WeightView<'_>),
) {
    let n = buf.len();
    match w.as_slice() {
        None => {
            let lambda = w.as_uniform().expect("weights are uniform or per-edge");
            core(buf, WeightView::Uniform(lambda));
        }
        Some(ws) => {
            let mut start = 0usize;
            for e in 0..n.saturating_sub(1) {
                if ws[e] == 0.0 {
                    let (head, tail) = buf.split_at_mut(e + 1);
                    core(&mut head[start..], WeightView::PerEdge(&ws[start..e]));
                    let _ = tail;
                    start = e + 1;
                }
            }
            core(&mut buf[start..], WeightView::PerEdge(&ws[start..n - 1]));
        }
    }
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::Classic => "classic",
        Method::Linearized => "linearized",
        Method::Hybrid => "hybrid",
    }
}

fn solve(
    y: &Signal,
    w: &WeightVector,
    opts: &SolverOptions,
    method: Method,
) -> Result<(Signal, SolverReport), TvError> {
    opts.validate()?;
    w.check_len(y.len())?;
    let start = Instant::now();

    let mut out = y.values().to_vec();
    let mut inner = 0u64;
    let identity = w.as_uniform() == Some(0.0);
    if !identity {
        let budget = hybrid_budget(y.len(), opts.hybrid_exponent);
        run_split(&mut out, w, |buf, wv| match method {
            Method::Classic => classic_core(buf, 0.0, wv, &mut inner),
            Method::Linearized => {
                linearized_core(buf, wv, u64::MAX, &mut inner);
            }
            Method::Hybrid => hybrid_core(buf, wv, budget, &mut inner),
        });
    }

    let mut report = SolverReport::new(method_label(method));
    report.iterations = 1;
    report.inner_steps = inner;
    report.objective = tv_objective(&out, y.values(), w, 1.0)?;
    report.duality_gap = dual_gap_l1(&dual_from_primal(y.values(), &out), y.values(), w);
    report.converged = true;
    report.wall_time = start.elapsed();
    Ok((Signal::new(out)?, report))
}

/// Recovers the dual of the box QP from a primal candidate:
/// u_j = sum_{k<=j} (x_k - y_k), the gap between the cumulative sums.
pub fn dual_from_primal(y: &[f64], x: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), x.len(), "lengths must agree");
    let n = y.len();
    let mut u = Vec::with_capacity(n.saturating_sub(1));
    let mut acc = 0.0;
    for j in 0..n.saturating_sub(1) {
        acc += x[j] - y[j];
        u.push(acc);
    }
    u
}

fn hybrid_budget(n: usize, exponent: f64) -> u64 {
    (n as f64).powf(exponent).ceil() as u64
}

pub(crate) fn check_finite(buf: &[f64]) -> Result<(), TvError> {
    match buf.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(TvError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Classic taut-string solver for weighted 1D TV-L1 proximity.
pub fn prox_tv1d_l1_classic(
    y: &Signal,
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    solve(y, w, opts, Method::Classic)
}

/// Linearized (single-pass, restart-on-break) taut-string solver.
pub fn prox_tv1d_l1_linearized(
    y: &Signal,
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    solve(y, w, opts, Method::Linearized)
}

/// Linearized solver under a ceil(n^S) step budget with a classic finish.
pub fn prox_tv1d_l1_hybrid(
    y: &Signal,
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<(Signal, SolverReport), TvError> {
    solve(y, w, opts, Method::Hybrid)
}

fn solve_inplace(
    buf: &mut [f64],
    w: &WeightVector,
    opts: &SolverOptions,
    method: Method,
) -> Result<u64, TvError> {
    opts.validate()?;
    w.check_len(buf.len())?;
    check_finite(buf)?;
    let mut inner = 0u64;
    if w.as_uniform() == Some(0.0) || buf.is_empty() {
        return Ok(inner);
    }
    let budget = hybrid_budget(buf.len(), opts.hybrid_exponent);
    run_split(buf, w, |piece, wv| match method {
        Method::Classic => classic_core(piece, 0.0, wv, &mut inner),
        Method::Linearized => {
            linearized_core(piece, wv, u64::MAX, &mut inner);
        }
        Method::Hybrid => hybrid_core(piece, wv, budget, &mut inner),
    });
    Ok(inner)
}

/// In-place classic solve over `buf` (input on entry, solution on exit).
/// Returns the inner step count; certificate bookkeeping is skipped.
pub fn prox_tv1d_l1_classic_inplace(
    buf: &mut [f64],
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<u64, TvError> {
    solve_inplace(buf, w, opts, Method::Classic)
}

/// In-place linearized solve; the output aliases the input buffer.
pub fn prox_tv1d_l1_linearized_inplace(
    buf: &mut [f64],
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<u64, TvError> {
    solve_inplace(buf, w, opts, Method::Linearized)
}

/// In-place hybrid solve; the output aliases the input buffer.
pub fn prox_tv1d_l1_hybrid_inplace(
    buf: &mut [f64],
    w: &WeightVector,
    opts: &SolverOptions,
) -> Result<u64, TvError> {
    solve_inplace(buf, w, opts, Method::Hybrid)
}
