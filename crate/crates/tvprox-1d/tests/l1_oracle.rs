//! Certified-oracle agreement for the taut-string solvers on desk-scale
//! problems, covering uniform, per-edge, and zero-weight instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvprox_1d::{prox_tv1d_l1_classic, prox_tv1d_l1_hybrid, prox_tv1d_l1_linearized};
use tvprox_core::{Signal, SolverOptions, WeightVector};
use tvprox_oracle::oracle_tv1d_dual_qp;

const ORACLE_TOL: f64 = 1e-6;

fn assert_matches_oracle(y: &[f64], w: &WeightVector) {
    let reference = oracle_tv1d_dual_qp(y, w, 1.0).expect("oracle must certify");
    let s = Signal::new(y.to_vec()).unwrap();
    let opts = SolverOptions::default();
    let solved = [
        prox_tv1d_l1_classic(&s, w, &opts).unwrap(),
        prox_tv1d_l1_linearized(&s, w, &opts).unwrap(),
        prox_tv1d_l1_hybrid(&s, w, &opts).unwrap(),
    ];
    for (x, report) in &solved {
        for (a, b) in x.values().iter().zip(&reference.solution) {
            assert!(
                (a - b).abs() <= ORACLE_TOL,
                "{} disagrees with oracle: {a} vs {b} (n = {})",
                report.method,
                y.len()
            );
        }
    }
}

#[test]
fn uniform_scenario_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d01);
    for _ in 0..120 {
        let n = rng.gen_range(2..=256);
        let lambda: f64 = rng.gen_range(0.0..50.0);
        let scale = (2.0 * lambda).max(1e-3);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
        let w = WeightVector::uniform(lambda).unwrap();
        assert_matches_oracle(&y, &w);
    }
}

#[test]
fn weighted_instances_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d02);
    for _ in 0..60 {
        let n = rng.gen_range(2..=128);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        // One edge in ten is pinched shut to exercise the splitting path.
        let ws: Vec<f64> = (0..n - 1)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(0.0..3.0)
                }
            })
            .collect();
        let w = WeightVector::per_edge(ws).unwrap();
        assert_matches_oracle(&y, &w);
    }
}

#[test]
fn tiny_lengths_agree_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d03);
    for n in 2..=8 {
        for _ in 0..40 {
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let lambda: f64 = rng.gen_range(0.01..4.0);
            let w = WeightVector::uniform(lambda).unwrap();
            assert_matches_oracle(&y, &w);
        }
    }
}
