use proptest::prelude::*;
use tvprox_core::{cumsum, diff_apply, diff_transpose_apply, dual_gap_l1, tv_objective, WeightVector};

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..max_len)
}

proptest! {
    /// <D x, u> == <x, D^T u> to 1e-12 relative: the transpose apply really is the adjoint.
    #[test]
    fn adjoint_identity(x in signal(200), seed in any::<u64>()) {
        let n = x.len();
        let mut state = seed;
        let mut u = Vec::with_capacity(n.saturating_sub(1));
        for _ in 0..n.saturating_sub(1) {
            // Cheap xorshift; the values just need to be arbitrary-ish.
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            u.push((state % 2000) as f64 / 100.0 - 10.0);
        }
        let dx = diff_apply(&x);
        let dtu = diff_transpose_apply(&u, n).unwrap();
        let lhs: f64 = dx.iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&dtu).map(|(a, b)| a * b).sum();
        let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    /// cumsum followed by adjacent differences recovers the input.
    #[test]
    fn cumsum_roundtrip(y in signal(500)) {
        let r = cumsum(&y);
        let scale = 1.0f64.max(r.iter().fold(0.0, |m: f64, &v| m.max(v.abs())));
        let mut prev = 0.0;
        for (i, &ri) in r.iter().enumerate() {
            prop_assert!((ri - prev - y[i]).abs() <= 1e-12 * scale);
            prev = ri;
        }
    }

    /// tv_objective is convex in x along random chords.
    #[test]
    fn objective_is_convex(
        y in signal(50),
        t in 0.0f64..1.0,
        lambda in 0.0f64..10.0,
        p_idx in 0usize..4,
        seed in any::<u64>(),
    ) {
        let n = y.len();
        let p = [1.0, 1.5, 2.0, f64::INFINITY][p_idx];
        let w = WeightVector::uniform(lambda).unwrap();
        let mut state = seed | 1;
        let mut draw = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 2000) as f64 / 100.0 - 10.0
        };
        let x1: Vec<f64> = (0..n).map(|_| draw()).collect();
        let x2: Vec<f64> = (0..n).map(|_| draw()).collect();
        let xt: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let f1 = tv_objective(&x1, &y, &w, p).unwrap();
        let f2 = tv_objective(&x2, &y, &w, p).unwrap();
        let ft = tv_objective(&xt, &y, &w, p).unwrap();
        prop_assert!(ft <= t * f1 + (1.0 - t) * f2 + 1e-10);
    }

    /// The clipped duality gap is never meaningfully negative.
    #[test]
    fn gap_is_nonnegative(y in signal(100), lambda in 0.0f64..20.0, seed in any::<u64>()) {
        let n = y.len();
        let w = WeightVector::uniform(lambda).unwrap();
        let mut state = seed | 1;
        let mut u = Vec::with_capacity(n.saturating_sub(1));
        for _ in 0..n.saturating_sub(1) {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            u.push((state % 4000) as f64 / 100.0 - 20.0);
        }
        prop_assert!(dual_gap_l1(&u, &y, &w) >= -1e-10);
    }
}
