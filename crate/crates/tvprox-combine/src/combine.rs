//! Splitting combiners that compose proximity operators.
//!
//! Each driver solves `argmin_x 0.5 * ||x - y||^2 + sum_i r_i(x)` given only
//! the prox of every `r_i`. Two-term problems get the alternating Dykstra
//! scheme (`combine_pd`) and a Douglas-Rachford scheme (`combine_dr`); sums
//! of any length get the parallel Dykstra scheme (`combine_ppd`) and
//! consensus ADMM (`combine_admm`).
//!
//! All four stop when the infinity-norm change of the primal iterate drops
//! to `opts.stop_tol`, and flag `converged = false` when `opts.max_iter`
//! rounds pass first. Reports count rounds in `iterations` and prox
//! evaluations in `inner_steps`; `objective` stays zero because the operator
//! trait exposes prox maps, not regularizer values.

use std::time::Instant;

use rayon::prelude::*;

use tvprox_core::{SolverOptions, SolverReport, TvError};

use crate::operator::ProxOperator;

fn check_finite(buf: &[f64]) -> Result<(), TvError> {
    match buf.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(TvError::NonFinite { index }),
        None => Ok(()),
    }
}

fn validate_combine(y: &[f64], opts: &SolverOptions) -> Result<(), TvError> {
    opts.validate()?;
    if !(opts.stop_tol.is_finite() && opts.stop_tol > 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "stop_tol must be finite and positive, got {}",
            opts.stop_tol
        )));
    }
    check_finite(y)
}

fn check_block(block: &[f64], n: usize) -> Result<(), TvError> {
    if block.len() == n {
        Ok(())
    } else {
        Err(TvError::Internal(format!(
            "prox operator returned length {} for input of length {n}",
            block.len()
        )))
    }
}

fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&ai, &bi)| m.max((ai - bi).abs()))
}

/// Optional dedicated thread pool honoring `opts.workers`.
///
/// `workers = 0` runs on the ambient rayon pool. The parallel sections only
/// fan out independent prox calls and always collect them back in block
/// order, so results are identical bit for bit at every pool size.
struct WorkerPool(Option<rayon::ThreadPool>);

impl WorkerPool {
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

fn prox_batch(
    ops: &[&dyn ProxOperator],
    inputs: &[Vec<f64>],
    scale: f64,
    pool: &WorkerPool,
    n: usize,
) -> Result<Vec<Vec<f64>>, TvError> {
    let blocks: Result<Vec<Vec<f64>>, TvError> = pool.run(|| {
        ops.par_iter()
            .zip(inputs.par_iter())
            .map(|(op, zi)| op.prox_scaled(zi, scale))
            .collect()
    });
    let blocks = blocks?;
    for block in &blocks {
        check_block(block, n)?;
    }
    Ok(blocks)
}

fn finish(
    mut report: SolverReport,
    x: Vec<f64>,
    clock: Instant,
) -> Result<(Vec<f64>, SolverReport), TvError> {
    report.wall_time = clock.elapsed();
    Ok((x, report))
}

/// Dykstra-style alternating combiner for two regularizers.
///
/// Keeps one correction vector per term; each round evaluates `prox_r2`
/// on the corrected iterate, then `prox_r1` on the result. For a single
/// term (the other operator identity) the corrections vanish and the
/// fixed point is reached as soon as the lone prox stabilizes.
pub fn combine_pd(
    y: &[f64],
    r1: &dyn ProxOperator,
    r2: &dyn ProxOperator,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolverReport), TvError> {
    validate_combine(y, opts)?;
    let clock = Instant::now();
    let n = y.len();
    let mut report = SolverReport::new("pd");
    if n == 0 {
        return finish(report, Vec::new(), clock);
    }
    let mut x = y.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    loop {
        let zin: Vec<f64> = x.iter().zip(&p).map(|(&xi, &pi)| xi + pi).collect();
        let z = r2.prox(&zin)?;
        check_block(&z, n)?;
        for j in 0..n {
            p[j] = zin[j] - z[j];
        }
        let xin: Vec<f64> = z.iter().zip(&q).map(|(&zi, &qi)| zi + qi).collect();
        let x_next = r1.prox(&xin)?;
        check_block(&x_next, n)?;
        for j in 0..n {
            q[j] = xin[j] - x_next[j];
        }
        report.inner_steps += 2;
        report.iterations += 1;
        let change = inf_diff(&x_next, &x);
        x = x_next;
        if change <= opts.stop_tol {
            return finish(report, x, clock);
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            return finish(report, x, clock);
        }
    }
}

/// Parallel Dykstra combiner for a sum of `m` regularizers.
///
/// Works on the product-space lift: `m` copies of the variable constrained
/// to agree, one regularizer per copy. On the lift the data term splits as
/// `(1/m) * sum_i 0.5 * ||x_i - y||^2`, so matching the blockwise prox
/// against the unit-weight quadratic requires the prox of `m * r_i`, not of
/// `r_i`; the block results are then averaged. Every copy starts at `y`.
/// With `m = 1` the first round already returns `prox_r(y)` exactly.
pub fn combine_ppd(
    y: &[f64],
    ops: &[&dyn ProxOperator],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolverReport), TvError> {
    validate_combine(y, opts)?;
    let clock = Instant::now();
    let n = y.len();
    let m = ops.len();
    if m == 0 {
        return Err(TvError::InvalidParameter(
            "combine_ppd needs at least one operator".into(),
        ));
    }
    let mut report = SolverReport::new("ppd");
    if n == 0 {
        return finish(report, Vec::new(), clock);
    }
    let pool = WorkerPool::build(opts.workers)?;
    let scale = m as f64;
    let mut x = y.to_vec();
    let mut z: Vec<Vec<f64>> = vec![y.to_vec(); m];
    loop {
        let p = prox_batch(ops, &z, scale, &pool, n)?;
        let mut x_next = vec![0.0; n];
        for block in &p {
            for j in 0..n {
                x_next[j] += block[j];
            }
        }
        for v in &mut x_next {
            *v /= scale;
        }
        for i in 0..m {
            for j in 0..n {
                z[i][j] += x_next[j] - p[i][j];
            }
        }
        report.inner_steps += m as u64;
        report.iterations += 1;
        let change = inf_diff(&x_next, &x);
        x = x_next;
        if change <= opts.stop_tol {
            return finish(report, x, clock);
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            return finish(report, x, clock);
        }
    }
}

/// Douglas-Rachford combiner for two regularizers.
///
/// Runs the averaged-reflections iteration on the auxiliary variable `z`
/// and extracts the primal candidate after every round. Only the extracted
/// sequence converges in general; `z` itself may drift without bound (it
/// does whenever both proxes are translations), so both the stopping rule
/// and the tests watch the extraction, never `z`.
pub fn combine_dr(
    y: &[f64],
    r1: &dyn ProxOperator,
    r2: &dyn ProxOperator,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolverReport), TvError> {
    validate_combine(y, opts)?;
    let clock = Instant::now();
    let n = y.len();
    let mut report = SolverReport::new("dr");
    if n == 0 {
        return finish(report, Vec::new(), clock);
    }
    let mut z = y.to_vec();
    let mut x = y.to_vec();
    loop {
        // Reflection across the second set: R2(z) = z - 2 * prox_r2(z).
        let pb = r2.prox(&z)?;
        check_block(&pb, n)?;
        let w: Vec<f64> = z.iter().zip(&pb).map(|(&zj, &pj)| zj - 2.0 * pj).collect();
        // Reflection across the first set maps v to v + 2 * prox_r1(y - v);
        // averaging with the identity gives the next z.
        let win: Vec<f64> = y.iter().zip(&w).map(|(&yj, &wj)| yj - wj).collect();
        let pa = r1.prox(&win)?;
        check_block(&pa, n)?;
        for j in 0..n {
            z[j] = 0.5 * (w[j] + z[j]) + pa[j];
        }
        // Extraction: the primal candidate lives at prox_r1(y - b) where
        // b = z - prox_r2(z) splits off the second term's share of y - x.
        let pz = r2.prox(&z)?;
        check_block(&pz, n)?;
        let bin: Vec<f64> = y
            .iter()
            .zip(&z)
            .zip(&pz)
            .map(|((&yj, &zj), &pj)| yj - (zj - pj))
            .collect();
        let x_next = r1.prox(&bin)?;
        check_block(&x_next, n)?;
        report.inner_steps += 4;
        report.iterations += 1;
        let change = inf_diff(&x_next, &x);
        x = x_next;
        if change <= opts.stop_tol {
            return finish(report, x, clock);
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            return finish(report, x, clock);
        }
    }
}

/// Consensus ADMM combiner for a sum of `m` regularizers.
///
/// One consensus copy per term, quadratic coupling with parameter `rho`.
/// The x-update averages `y` with the shifted copies, each copy then takes
/// a prox step at scale `1 / rho`, and the multipliers absorb the residual
/// disagreement. Any positive `rho` converges on this strongly convex
/// problem; `rho` only tunes the rate.
pub fn combine_admm(
    y: &[f64],
    ops: &[&dyn ProxOperator],
    rho: f64,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolverReport), TvError> {
    validate_combine(y, opts)?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(TvError::InvalidParameter(format!(
            "ADMM penalty parameter must be finite and positive, got {rho}"
        )));
    }
    let clock = Instant::now();
    let n = y.len();
    let m = ops.len();
    if m == 0 {
        return Err(TvError::InvalidParameter(
            "combine_admm needs at least one operator".into(),
        ));
    }
    let mut report = SolverReport::new("admm");
    if n == 0 {
        return finish(report, Vec::new(), clock);
    }
    let pool = WorkerPool::build(opts.workers)?;
    let mut x = y.to_vec();
    let mut z: Vec<Vec<f64>> = vec![y.to_vec(); m];
    let mut u: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
    loop {
        let mut x_next = y.to_vec();
        for i in 0..m {
            for j in 0..n {
                x_next[j] += u[i][j] + rho * z[i][j];
            }
        }
        let denom = 1.0 + m as f64 * rho;
        for v in &mut x_next {
            *v /= denom;
        }
        let change = inf_diff(&x_next, &x);
        x = x_next;
        // The very first x-update reproduces y identically (z starts at y
        // with zero multipliers), so the change test only arms afterwards.
        if report.iterations >= 1 && change <= opts.stop_tol {
            return finish(report, x, clock);
        }
        if report.iterations >= opts.max_iter {
            report.converged = false;
            return finish(report, x, clock);
        }
        report.iterations += 1;
        let zin: Vec<Vec<f64>> = u
            .iter()
            .map(|ui| {
                x.iter()
                    .zip(ui)
                    .map(|(&xj, &uj)| xj - uj / rho)
                    .collect()
            })
            .collect();
        z = prox_batch(ops, &zin, 1.0 / rho, &pool, n)?;
        for i in 0..m {
            for j in 0..n {
                u[i][j] += rho * (z[i][j] - x[j]);
            }
        }
        report.inner_steps += m as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{IdentityProx, SoftThresholdProx, Tv1dProx};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tight() -> SolverOptions {
        let mut opts = SolverOptions::default();
        opts.stop_tol = 1e-9;
        opts.max_iter = 100_000;
        opts
    }

    fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    #[test]
    fn identity_pair_returns_the_input_after_one_round() {
        let y = [0.5, -1.25, 3.0, 0.0];
        let (x, report) =
            combine_pd(&y, &IdentityProx, &IdentityProx, &SolverOptions::default()).unwrap();
        assert_eq!(x, y.to_vec());
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
    }

    #[test]
    fn single_term_pd_degenerates_to_the_plain_prox() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let tv = Tv1dProx::new(0.8, 1.0);
        for _ in 0..20 {
            let y = random_signal(&mut rng, 15);
            let (x, report) = combine_pd(&y, &tv, &IdentityProx, &tight()).unwrap();
            let direct = tv.prox(&y).unwrap();
            assert!(inf_diff(&x, &direct) < 1e-8);
            assert!(report.converged);
        }
    }

    #[test]
    fn flsa_pair_soft_thresholds_the_tv_prox() {
        let soft = SoftThresholdProx::new(0.2);
        let tv = Tv1dProx::new(0.5, 1.0);
        let mut opts = tight();
        opts.stop_tol = 1e-11;
        let (x, report) = combine_pd(&[0.0, 2.0], &soft, &tv, &opts).unwrap();
        assert!(report.converged);
        assert!((x[0] - 0.3).abs() < 1e-8, "got {x:?}");
        assert!((x[1] - 1.3).abs() < 1e-8, "got {x:?}");
    }

    #[test]
    fn ppd_with_one_operator_is_the_plain_prox() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let tv = Tv1dProx::new(1.1, 1.0);
        for _ in 0..10 {
            let y = random_signal(&mut rng, 12);
            let (x, report) = combine_ppd(&y, &[&tv], &tight()).unwrap();
            let direct = tv.prox(&y).unwrap();
            assert!(inf_diff(&x, &direct) < 1e-12);
            assert!(report.converged);
        }
    }

    #[test]
    fn ppd_matches_pd_on_two_term_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..10 {
            let y = random_signal(&mut rng, 14);
            let soft = SoftThresholdProx::new(rng.gen_range(0.05..0.5));
            let tv = Tv1dProx::new(rng.gen_range(0.1..1.0), 1.0);
            let (xp, _) = combine_pd(&y, &soft, &tv, &tight()).unwrap();
            let (xq, _) = combine_ppd(&y, &[&soft, &tv], &tight()).unwrap();
            assert!(inf_diff(&xp, &xq) < 1e-6, "pd/ppd split: {}", inf_diff(&xp, &xq));
        }
    }

    #[test]
    fn dr_with_a_zero_second_term_extracts_the_first_prox_immediately() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let tv = Tv1dProx::new(0.9, 2.0);
        for _ in 0..10 {
            let y = random_signal(&mut rng, 13);
            let (x, report) = combine_dr(&y, &tv, &IdentityProx, &tight()).unwrap();
            let direct = tv.prox(&y).unwrap();
            assert!(inf_diff(&x, &direct) < 1e-8);
            assert!(report.converged);
            assert!(report.iterations <= 2);
        }
    }

    #[test]
    fn dr_identity_pair_extracts_y_while_z_drifts() {
        let y = [1.5, -0.5];
        let (x, report) = combine_dr(&y, &IdentityProx, &IdentityProx, &tight()).unwrap();
        assert_eq!(x, y.to_vec());
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn admm_single_block_matches_the_direct_prox() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let tv = Tv1dProx::new(0.6, 1.0);
        for _ in 0..10 {
            let y = random_signal(&mut rng, 11);
            let (x, report) = combine_admm(&y, &[&tv], 1.0, &SolverOptions::default()).unwrap();
            let direct = tv.prox(&y).unwrap();
            assert!(report.converged);
            assert!(inf_diff(&x, &direct) < 1e-5, "admm: {}", inf_diff(&x, &direct));
        }
    }

    #[test]
    fn admm_identity_blocks_fix_y() {
        let y = [2.0, -1.0, 0.25];
        let ops: Vec<&dyn ProxOperator> = vec![&IdentityProx, &IdentityProx, &IdentityProx];
        let (x, report) = combine_admm(&y, &ops, 1.0, &SolverOptions::default()).unwrap();
        assert!(inf_diff(&x, &y) < 1e-12);
        assert!(report.converged);
        assert!(report.iterations <= 2);
    }

    #[test]
    fn the_four_combiners_share_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        for _ in 0..6 {
            let y = random_signal(&mut rng, 16);
            let soft = SoftThresholdProx::new(rng.gen_range(0.05..0.4));
            let tv = Tv1dProx::new(rng.gen_range(0.2..0.8), 1.0);
            let opts = tight();
            let (a, _) = combine_pd(&y, &soft, &tv, &opts).unwrap();
            let (b, _) = combine_ppd(&y, &[&soft, &tv], &opts).unwrap();
            let (c, _) = combine_dr(&y, &soft, &tv, &opts).unwrap();
            let (d, _) = combine_admm(&y, &[&soft, &tv], 1.0, &opts).unwrap();
            for pair in [(&a, &b), (&a, &c), (&a, &d), (&b, &c), (&b, &d), (&c, &d)] {
                assert!(inf_diff(pair.0, pair.1) < 1e-4, "spread {}", inf_diff(pair.0, pair.1));
            }
        }
    }

    #[test]
    fn admm_two_blocks_agrees_with_dr() {
        let mut rng = ChaCha8Rng::seed_from_u64(76);
        for _ in 0..8 {
            let y = random_signal(&mut rng, 12);
            let soft = SoftThresholdProx::new(0.15);
            let tv = Tv1dProx::new(0.45, 1.0);
            let opts = tight();
            let (a, _) = combine_admm(&y, &[&soft, &tv], 1.0, &opts).unwrap();
            let (b, _) = combine_dr(&y, &soft, &tv, &opts).unwrap();
            assert!(inf_diff(&a, &b) < 1e-4, "admm/dr split {}", inf_diff(&a, &b));
        }
    }

    #[test]
    fn budget_runs_land_within_a_relative_mile_of_the_long_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let y = random_signal(&mut rng, 20);
        let soft = SoftThresholdProx::new(0.1);
        let tv = Tv1dProx::new(0.5, 1.0);
        let mut long = SolverOptions::default();
        long.stop_tol = 1e-12;
        long.max_iter = 500_000;
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (reference, _) = combine_pd(&y, &soft, &tv, &long).unwrap();
        let defaults = SolverOptions::default();
        let runs = [
            combine_pd(&y, &soft, &tv, &defaults).unwrap(),
            combine_ppd(&y, &[&soft, &tv], &defaults).unwrap(),
            combine_dr(&y, &soft, &tv, &defaults).unwrap(),
            combine_admm(&y, &[&soft, &tv], 1.0, &defaults).unwrap(),
        ];
        for (x, report) in &runs {
            assert!(report.converged, "{} hit its cap", report.method);
            let rel = inf_diff(x, &reference) / scale;
            assert!(rel < 1e-3, "{} landed at {rel}", report.method);
        }
    }

    #[test]
    fn worker_counts_do_not_change_a_single_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let y = random_signal(&mut rng, 24);
        let soft = SoftThresholdProx::new(0.12);
        let tv1 = Tv1dProx::new(0.3, 1.0);
        let tv2 = Tv1dProx::new(0.2, 2.0);
        let ops: Vec<&dyn ProxOperator> = vec![&soft, &tv1, &tv2];
        let mut runs = Vec::new();
        for workers in [1usize, 2, 8] {
            let mut opts = tight();
            opts.workers = workers;
            let (xp, _) = combine_ppd(&y, &ops, &opts).unwrap();
            let (xa, _) = combine_admm(&y, &ops, 1.0, &opts).unwrap();
            runs.push((xp, xa));
        }
        for (xp, xa) in &runs[1..] {
            assert_eq!(xp, &runs[0].0);
            assert_eq!(xa, &runs[0].1);
        }
    }

    #[test]
    fn caps_are_reported_as_non_convergence() {
        let mut opts = SolverOptions::default();
        opts.max_iter = 2;
        opts.stop_tol = 1e-15;
        let y = [0.0, 2.0, -1.0, 0.5];
        let soft = SoftThresholdProx::new(0.2);
        let tv = Tv1dProx::new(0.5, 2.0);
        let (_, report) = combine_pd(&y, &soft, &tv, &opts).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 2);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let opts = SolverOptions::default();
        assert!(combine_pd(&[f64::NAN], &IdentityProx, &IdentityProx, &opts).is_err());
        assert!(combine_ppd(&[1.0], &[], &opts).is_err());
        assert!(combine_admm(&[1.0], &[&IdentityProx], 0.0, &opts).is_err());
        assert!(combine_admm(&[1.0], &[&IdentityProx], f64::NAN, &opts).is_err());
        let mut bad = SolverOptions::default();
        bad.stop_tol = 0.0;
        assert!(combine_dr(&[1.0], &IdentityProx, &IdentityProx, &bad).is_err());
    }

    #[test]
    fn empty_inputs_return_empty_outputs() {
        let opts = SolverOptions::default();
        let (x, report) = combine_pd(&[], &IdentityProx, &IdentityProx, &opts).unwrap();
        assert!(x.is_empty());
        assert!(report.converged);
        let (x, _) = combine_ppd(&[], &[&IdentityProx], &opts).unwrap();
        assert!(x.is_empty());
        let (x, _) = combine_admm(&[], &[&IdentityProx], 1.0, &opts).unwrap();
        assert!(x.is_empty());
    }
}
