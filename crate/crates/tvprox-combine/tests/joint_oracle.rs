//! Cross-checks every combiner against the certified joint-prox oracle on
//! random fused-lasso style sums (elementwise l1 plus a TV chain).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tvprox_combine::{
    combine_admm, combine_dr, combine_pd, combine_ppd, ProxOperator, SoftThresholdProx, Tv1dProx,
};
use tvprox_core::SolverOptions;
use tvprox_oracle::{oracle_joint_prox, tv_chain_terms, OracleTerm};

fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

fn tight() -> SolverOptions {
    let mut opts = SolverOptions::default();
    opts.stop_tol = 1e-9;
    opts.max_iter = 200_000;
    opts
}

fn abs_terms(n: usize, weight: f64) -> Vec<OracleTerm> {
    (0..n)
        .map(|a| OracleTerm::AbsEdge {
            a,
            b: None,
            weight,
        })
        .collect()
}

#[test]
fn combiners_match_the_joint_oracle_on_fused_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    for case in 0..15 {
        let n = rng.gen_range(2..=24);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lam1 = rng.gen_range(0.05..0.6);
        let lam2 = rng.gen_range(0.1..1.0);

        let mut terms = abs_terms(n, lam1);
        terms.extend(tv_chain_terms(0, n, &vec![lam2; n - 1]));
        let oracle = oracle_joint_prox(&y, &terms).expect("oracle certification");

        let soft = SoftThresholdProx::new(lam1);
        let tv = Tv1dProx::new(lam2, 1.0);
        let opts = tight();
        let runs = [
            combine_pd(&y, &soft, &tv, &opts).unwrap(),
            combine_ppd(&y, &[&soft, &tv], &opts).unwrap(),
            combine_dr(&y, &soft, &tv, &opts).unwrap(),
            combine_admm(&y, &[&soft, &tv], 1.0, &opts).unwrap(),
        ];
        for (x, report) in &runs {
            let err = inf_diff(x, &oracle.solution);
            assert!(
                err < 1e-4,
                "case {case}: {} is {err} from the oracle",
                report.method
            );
        }
    }
}

#[test]
fn three_term_sums_agree_with_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    for case in 0..8 {
        let n = rng.gen_range(3..=16);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lam1 = rng.gen_range(0.05..0.3);
        let lam2 = rng.gen_range(0.1..0.6);
        let lam3 = rng.gen_range(0.1..0.6);

        let mut terms = abs_terms(n, lam1);
        terms.extend(tv_chain_terms(0, n, &vec![lam2; n - 1]));
        terms.extend(tv_chain_terms(0, n, &vec![lam3; n - 1]));
        let oracle = oracle_joint_prox(&y, &terms).expect("oracle certification");

        let soft = SoftThresholdProx::new(lam1);
        let tv_a = Tv1dProx::new(lam2, 1.0);
        let tv_b = Tv1dProx::new(lam3, 1.0);
        let ops: Vec<&dyn ProxOperator> = vec![&soft, &tv_a, &tv_b];
        let opts = tight();
        let (xp, _) = combine_ppd(&y, &ops, &opts).unwrap();
        let (xa, _) = combine_admm(&y, &ops, 1.0, &opts).unwrap();
        let ep = inf_diff(&xp, &oracle.solution);
        let ea = inf_diff(&xa, &oracle.solution);
        assert!(ep < 1e-4, "case {case}: ppd is {ep} from the oracle");
        assert!(ea < 1e-4, "case {case}: admm is {ea} from the oracle");
    }
}

#[test]
fn flsa_example_lands_on_the_reference_point() {
    let y = [0.0, 2.0];
    let terms = [
        OracleTerm::AbsEdge {
            a: 0,
            b: None,
            weight: 0.2,
        },
        OracleTerm::AbsEdge {
            a: 1,
            b: None,
            weight: 0.2,
        },
        OracleTerm::AbsEdge {
            a: 1,
            b: Some(0),
            weight: 0.5,
        },
    ];
    let oracle = oracle_joint_prox(&y, &terms).expect("oracle certification");
    assert!((oracle.solution[0] - 0.3).abs() < 1e-6);
    assert!((oracle.solution[1] - 1.3).abs() < 1e-6);

    let soft = SoftThresholdProx::new(0.2);
    let tv = Tv1dProx::new(0.5, 1.0);
    let mut opts = tight();
    opts.stop_tol = 1e-11;
    let (x, _) = combine_dr(&y, &soft, &tv, &opts).unwrap();
    assert!(inf_diff(&x, &oracle.solution) < 1e-6);
}
