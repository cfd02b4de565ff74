//! Oracle-local projections. The bisection and sorting routines here are the
//! independent counterparts of the production projections; the test suites check
//! the two families against each other.

/// Elementwise clamp into the box |u_i| <= w_i.
pub fn project_box(u: &[f64], w: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(w)
        .map(|(&ui, &wi)| ui.clamp(-wi, wi))
        .collect()
}

fn lq_norm(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    if q.is_infinite() {
        return v.iter().fold(0.0, |m: f64, &x| m.max(x.abs()));
    }
    // Scale out the largest magnitude to keep powf away from overflow.
    let peak = v.iter().fold(0.0, |m: f64, &x| m.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    peak * v
        .iter()
        .map(|&x| (x.abs() / peak).powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// Exact projection onto the l1 ball of radius `lambda` by the sorted-threshold rule.
pub fn project_l1_ball_sort(u: &[f64], lambda: f64) -> Vec<f64> {
    let total: f64 = u.iter().map(|x| x.abs()).sum();
    if total <= lambda {
        return u.to_vec();
    }
    if lambda <= 0.0 {
        return vec![0.0; u.len()];
    }
    let mut mags: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        acc += m;
        let cand = (acc - lambda) / (j + 1) as f64;
        if m - cand > 0.0 {
            theta = cand;
        } else {
            break;
        }
    }
    u.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Projection onto the lq ball of radius `lambda` for q in (1, inf), solved by nested
/// bisection on the KKT system: outer bisection on the multiplier nu, inner bisection
/// on each coordinate equation t + nu * (t/lambda)^(q-1) = |u_i|.
pub fn project_lq_ball_bisect(u: &[f64], lambda: f64, q: f64) -> Vec<f64> {
    assert!(q > 1.0 && q.is_finite(), "q must lie in (1, inf)");
    if lambda <= 0.0 {
        return vec![0.0; u.len()];
    }
    if lq_norm(u, q) <= lambda {
        return u.to_vec();
    }
    let mags: Vec<f64> = u.iter().map(|x| x.abs()).collect();

    let coords_at = |nu: f64| -> Vec<f64> {
        mags.iter()
            .map(|&a| {
                if a == 0.0 {
                    return 0.0;
                }
                // phi(t) = t + nu (t/lambda)^(q-1) is increasing with phi(0) = 0 and
                // phi(a) >= a, so the root sits in [0, a].
                let (mut lo, mut hi) = (0.0, a);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let phi = mid + nu * (mid / lambda).powf(q - 1.0);
                    if phi < a {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    };

    // Bracket the multiplier: the norm of w(nu) decreases in nu.
    let mut hi = 1.0;
    let mut guard = 0;
    while lq_norm(&coords_at(hi), q) > lambda {
        hi *= 2.0;
        guard += 1;
        assert!(guard < 200, "failed to bracket the lq projection multiplier");
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if lq_norm(&coords_at(mid), q) > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = coords_at(0.5 * (lo + hi));
    u.iter()
        .zip(&w)
        .map(|(&ui, &wi)| ui.signum() * wi)
        .collect()
}
