use crate::{TvError, WeightVector};

/// Forward differences: out_i = x_{i+1} - x_i. A length-1 input yields an empty vector.
///
/// This is the matrix D of the dual derivations, applied without materializing it.
pub fn diff_apply(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|p| p[1] - p[0]).collect()
}

/// The exact adjoint of `diff_apply`: out = D^T u for a signal length of `n`.
///
/// out_0 = -u_0, out_i = u_{i-1} - u_i in the interior, out_{n-1} = u_{n-2}.
pub fn diff_transpose_apply(u: &[f64], n: usize) -> Result<Vec<f64>, TvError> {
    if u.len() + 1 != n {
        return Err(TvError::LengthMismatch {
            expected: n.saturating_sub(1),
            got: u.len(),
        });
    }
    let mut out = vec![0.0; n];
    if n == 1 {
        return Ok(out);
    }
    out[0] = -u[0];
    for i in 1..n - 1 {
        out[i] = u[i - 1] - u[i];
    }
    out[n - 1] = u[n - 2];
    Ok(out)
}

/// Running sums r_i = sum_{k<=i} y_k, the curve the taut-string tube is built around.
pub fn cumsum(y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for &v in y {
        acc += v;
        out.push(acc);
    }
    out
}

/// The prox objective 0.5*||x - y||^2 plus the TV penalty for exponent `p`.
///
/// Per-edge weights are only defined for p = 1 (the weighted sum of absolute
/// differences). For p in (1, inf) and p = inf the uniform shorthand is required
/// and enters as lambda * ||Dx||_p.
pub fn tv_objective(x: &[f64], y: &[f64], w: &WeightVector, p: f64) -> Result<f64, TvError> {
    if x.len() != y.len() {
        return Err(TvError::LengthMismatch {
            expected: y.len(),
            got: x.len(),
        });
    }
    if p.is_nan() || p < 1.0 {
        return Err(TvError::InvalidParameter(format!(
            "TV exponent must satisfy p >= 1, got {p}"
        )));
    }
    w.check_len(x.len())?;

    let quad: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        * 0.5;

    let reg = if p == 1.0 {
        x.windows(2)
            .enumerate()
            .map(|(j, pair)| w.get(j) * (pair[1] - pair[0]).abs())
            .sum()
    } else {
        let lambda = w.as_uniform().ok_or_else(|| {
            TvError::InvalidParameter("per-edge weights are only supported for p = 1".into())
        })?;
        let diffs = x.windows(2).map(|pair| (pair[1] - pair[0]).abs());
        if p.is_infinite() {
            lambda * diffs.fold(0.0, f64::max)
        } else {
            lambda * diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };

    Ok(quad + reg)
}

/// Duality gap of the TV-L1 dual box QP at the point u, after clipping u into the box.
///
/// With x = y - D^T clip(u), the gap collapses to sum_j w_j|dx_j| - u_j dx_j, which is
/// the primal objective at x minus the dual objective at clip(u). Nonnegative up to
/// rounding; zero exactly at the optimum.
pub fn dual_gap_l1(u: &[f64], y: &[f64], w: &WeightVector) -> f64 {
    let n = y.len();
    assert_eq!(u.len() + 1, n.max(1), "dual length must be n - 1");
    if n <= 1 {
        return 0.0;
    }
    let mut clipped = Vec::with_capacity(n - 1);
    for (i, &ui) in u.iter().enumerate() {
        let wi = w.get(i);
        clipped.push(ui.clamp(-wi, wi));
    }
    // x_i = y_i - (D^T u)_i, expanded inline.
    let mut x = Vec::with_capacity(n);
    x.push(y[0] + clipped[0]);
    for i in 1..n - 1 {
        x.push(y[i] - clipped[i - 1] + clipped[i]);
    }
    x.push(y[n - 1] - clipped[n - 2]);

    let mut gap = 0.0;
    for j in 0..n - 1 {
        let dx = x[j + 1] - x[j];
        gap += w.get(j) * dx.abs() - clipped[j] * dx;
    }
    gap
}

/// Infinity-norm residual of the Moreau decomposition prox + dual_prox - y.
///
/// Test utility: callers assert the result is near zero when the two arguments
/// really are the prox pair of y.
pub fn moreau_check(prox_value: &[f64], dual_prox_value: &[f64], y: &[f64]) -> f64 {
    assert_eq!(prox_value.len(), y.len(), "lengths must agree");
    assert_eq!(dual_prox_value.len(), y.len(), "lengths must agree");
    prox_value
        .iter()
        .zip(dual_prox_value)
        .zip(y)
        .map(|((&a, &b), &c)| (a + b - c).abs())
        .fold(0.0, f64::max)
}
