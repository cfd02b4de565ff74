//! Reference solver for prox problems over sums of structured regularizers:
//! min_x 0.5 ||x - y||^2 + sum of terms, each term either a weighted absolute
//! difference (or absolute value) or an lp norm over a list of differences.
//!
//! Solved on the dual by blockwise proximal minimization: exact scalar updates for
//! the box-constrained absolute-value duals, projected gradient blocks for the
//! ball-constrained norm duals. Twenty random restarts must land on the same primal
//! point for the result to be certified.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::proj::{project_l1_ball_sort, project_lq_ball_bisect};
use crate::{OracleError, OracleResult, CERTIFY_GAP, JOINT_ORACLE_MAX_LEN};

/// One additive piece of the regularizer sum.
#[derive(Clone, Debug)]
pub enum OracleTerm {
    /// weight * |x_a - x_b|, or weight * |x_a| when `b` is None.
    AbsEdge {
        a: usize,
        b: Option<usize>,
        weight: f64,
    },
    /// lambda * lp-norm of the difference vector (x_hi - x_lo) over `edges`.
    ///
    /// Each index may appear in at most two edges of one group (fiber structure);
    /// that keeps the blockwise stepsize bound valid.
    NormGroup {
        edges: Vec<(usize, usize)>,
        lambda: f64,
        p: f64,
    },
}

const RESTARTS: usize = 20;
const MAX_SWEEPS: usize = 500_000;

struct Restart {
    x: Vec<f64>,
    objective: f64,
    gap: f64,
    sweeps: usize,
}

/// Certified joint prox. Refuses to certify when the final gap exceeds 1e-10 or the
/// restarts disagree by more than 1e-8 in infinity norm.
pub fn oracle_joint_prox(y: &[f64], terms: &[OracleTerm]) -> Result<OracleResult, OracleError> {
    let n = y.len();
    if n > JOINT_ORACLE_MAX_LEN {
        return Err(OracleError::TooLarge {
            n,
            cap: JOINT_ORACLE_MAX_LEN,
        });
    }
    for term in terms {
        validate_term(term, n)?;
    }

    let mut runs: Vec<Restart> = Vec::with_capacity(RESTARTS);
    for restart in 0..RESTARTS {
        runs.push(run_once(y, terms, restart as u64));
    }

    let mut worst_pair = 0.0f64;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let d = runs[i]
                .x
                .iter()
                .zip(&runs[j].x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_pair = worst_pair.max(d);
        }
    }
    if worst_pair > 1e-8 {
        return Err(OracleError::NotCertified(format!(
            "restarts disagree by {worst_pair:.3e}"
        )));
    }

    let best = runs
        .into_iter()
        .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
        .expect("at least one restart");
    if !(best.gap.abs() <= CERTIFY_GAP) {
        return Err(OracleError::NotCertified(format!(
            "joint prox gap {:.3e} after {} sweeps",
            best.gap, best.sweeps
        )));
    }
    Ok(OracleResult {
        solution: best.x,
        gap: best.gap,
        iterations: best.sweeps,
    })
}

fn validate_term(term: &OracleTerm, n: usize) -> Result<(), OracleError> {
    match term {
        OracleTerm::AbsEdge { a, b, weight } => {
            if *a >= n || b.map_or(false, |b| b >= n) {
                return Err(OracleError::Unsupported("edge index out of range".into()));
            }
            if !(*weight >= 0.0) {
                return Err(OracleError::Unsupported("negative edge weight".into()));
            }
        }
        OracleTerm::NormGroup { edges, lambda, p } => {
            if edges.iter().any(|&(a, b)| a >= n || b >= n) {
                return Err(OracleError::Unsupported("edge index out of range".into()));
            }
            if !(*lambda >= 0.0) || !(*p > 1.0) {
                return Err(OracleError::Unsupported(
                    "norm groups need lambda >= 0 and p > 1".into(),
                ));
            }
            let mut uses = std::collections::HashMap::new();
            for &(a, b) in edges {
                *uses.entry(a).or_insert(0usize) += 1;
                *uses.entry(b).or_insert(0usize) += 1;
            }
            if uses.values().any(|&c| c > 2) {
                return Err(OracleError::Unsupported(
                    "norm group is not fiber-structured (an index appears in 3+ edges)".into(),
                ));
            }
        }
    }
    Ok(())
}

fn run_once(y: &[f64], terms: &[OracleTerm], seed: u64) -> Restart {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7A11_5EED ^ seed);

    // Dual variables: one scalar per AbsEdge, one block per NormGroup.
    let mut scalars: Vec<f64> = Vec::new();
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for term in terms {
        match term {
            OracleTerm::AbsEdge { weight, .. } => {
                scalars.push(rng.gen_range(-1.0..1.0) * weight);
            }
            OracleTerm::NormGroup { edges, lambda, p } => {
                let raw: Vec<f64> = (0..edges.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let q = p / (p - 1.0);
                let norm = lq_norm(&raw, q);
                let scale = if norm > 0.0 {
                    (lambda / norm).min(1.0)
                } else {
                    0.0
                };
                blocks.push(raw.into_iter().map(|v| v * scale).collect());
            }
        }
    }

    let rebuild_x = |scalars: &[f64], blocks: &[Vec<f64>]| -> Vec<f64> {
        let mut x = y.to_vec();
        let mut si = 0;
        let mut bi = 0;
        for term in terms {
            match term {
                OracleTerm::AbsEdge { a, b, .. } => {
                    let u = scalars[si];
                    si += 1;
                    x[*a] -= u;
                    if let Some(b) = b {
                        x[*b] += u;
                    }
                }
                OracleTerm::NormGroup { edges, .. } => {
                    for (&(a, b), &u) in edges.iter().zip(&blocks[bi]) {
                        x[b] -= u;
                        x[a] += u;
                    }
                    bi += 1;
                }
            }
        }
        x
    };

    let mut x = rebuild_x(&scalars, &blocks);
    let mut sweeps = 0usize;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut change = 0.0f64;
        let mut si = 0;
        let mut bi = 0;
        for term in terms {
            match term {
                OracleTerm::AbsEdge { a, b, weight } => {
                    // Exact minimization of the dual quadratic in this coordinate.
                    let u_old = scalars[si];
                    let resid = x[*a] - b.map_or(0.0, |b| x[b]);
                    let denom = if b.is_some() { 2.0 } else { 1.0 };
                    let u_new = (u_old + resid / denom).clamp(-weight, *weight);
                    let delta = u_new - u_old;
                    if delta != 0.0 {
                        scalars[si] = u_new;
                        x[*a] -= delta;
                        if let Some(b) = b {
                            x[*b] += delta;
                        }
                        change = change.max(delta.abs());
                    }
                    si += 1;
                }
                OracleTerm::NormGroup { edges, lambda, p } => {
                    // One projected gradient step on the block; 1/4 bounds the
                    // blockwise Lipschitz constant for fiber-structured edges.
                    let block = &mut blocks[bi];
                    let raw: Vec<f64> = edges
                        .iter()
                        .zip(block.iter())
                        .map(|(&(a, b), &u)| u + 0.25 * (x[b] - x[a]))
                        .collect();
                    let q = p / (p - 1.0);
                    let projected = if p.is_infinite() {
                        project_l1_ball_sort(&raw, *lambda)
                    } else {
                        project_lq_ball_bisect(&raw, *lambda, q)
                    };
                    for ((&(a, b), u), new) in
                        edges.iter().zip(block.iter_mut()).zip(projected)
                    {
                        let delta = new - *u;
                        if delta != 0.0 {
                            *u = new;
                            x[b] -= delta;
                            x[a] += delta;
                            change = change.max(delta.abs());
                        }
                    }
                    bi += 1;
                }
            }
        }
        if sweeps % 128 == 0 {
            // Periodically rebuild x to wash out incremental-update drift.
            x = rebuild_x(&scalars, &blocks);
        }
        let gap = gap_at(y, terms, &scalars, &blocks, &x);
        if gap <= 1e-12 || change <= 1e-16 {
            break;
        }
    }

    x = rebuild_x(&scalars, &blocks);
    let gap = gap_at(y, terms, &scalars, &blocks, &x);
    let objective = 0.5
        * x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
        + regularizer_value(terms, &x);
    Restart {
        x,
        objective,
        gap,
        sweeps,
    }
}

fn regularizer_value(terms: &[OracleTerm], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for term in terms {
        match term {
            OracleTerm::AbsEdge { a, b, weight } => {
                total += weight * (x[*a] - b.map_or(0.0, |b| x[b])).abs();
            }
            OracleTerm::NormGroup { edges, lambda, p } => {
                let v: Vec<f64> = edges.iter().map(|&(a, b)| x[b] - x[a]).collect();
                total += lambda * lp_norm(&v, *p);
            }
        }
    }
    total
}

fn gap_at(
    _y: &[f64],
    terms: &[OracleTerm],
    scalars: &[f64],
    blocks: &[Vec<f64>],
    x: &[f64],
) -> f64 {
    // Primal minus dual objective collapses to reg(x) - <dual, linear-map(x)>.
    let mut gap = 0.0;
    let mut si = 0;
    let mut bi = 0;
    for term in terms {
        match term {
            OracleTerm::AbsEdge { a, b, weight } => {
                let d = x[*a] - b.map_or(0.0, |b| x[b]);
                gap += weight * d.abs() - scalars[si] * d;
                si += 1;
            }
            OracleTerm::NormGroup { edges, lambda, p } => {
                let v: Vec<f64> = edges.iter().map(|&(a, b)| x[b] - x[a]).collect();
                let pairing: f64 = v.iter().zip(&blocks[bi]).map(|(d, u)| d * u).sum();
                gap += lambda * lp_norm(&v, *p) - pairing;
                bi += 1;
            }
        }
    }
    gap
}

fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return v.iter().fold(0.0, |m: f64, &x| m.max(x.abs()));
    }
    let peak = v.iter().fold(0.0, |m: f64, &x| m.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    peak * v
        .iter()
        .map(|&x| (x.abs() / peak).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn lq_norm(v: &[f64], q: f64) -> f64 {
    lp_norm(v, q)
}

/// Convenience: the AbsEdge terms of a 1D TV penalty with the given dense weights.
pub fn tv_chain_terms(offset: usize, len: usize, weights: &[f64]) -> Vec<OracleTerm> {
    (0..len.saturating_sub(1))
        .map(|j| OracleTerm::AbsEdge {
            a: offset + j + 1,
            b: Some(offset + j),
            weight: weights[j],
        })
        .collect()
}
