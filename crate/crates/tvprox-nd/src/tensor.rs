//! Dense row-major tensors and the fiber bookkeeping the solvers run on.

use tvprox_core::TvError;

/// Dense N-dimensional array, row major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct TensorND {
    dims: Vec<usize>,
    data: Vec<f64>,
}

/// One 1D fiber of a tensor along a fixed axis.
///
/// `index` is the multi-index over the remaining axes in their original
/// order; `offset` and `stride` address the fiber inside the flat buffer.
/// The fibers of one axis partition the tensor exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberView {
    pub axis: usize,
    pub index: Vec<usize>,
    pub offset: usize,
    pub stride: usize,
}

/// Per-axis penalty description: one `(lambda, p)` pair per tensor axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisSpec {
    pairs: Vec<(f64, f64)>,
}

impl AxisSpec {
    /// Validates every pair: finite `lambda >= 0` and `p >= 1` (infinity allowed).
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self, TvError> {
        for &(lambda, p) in &pairs {
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
        }
        Ok(Self { pairs })
    }

    /// Uniform spec: the same `(lambda, p)` on every one of `m` axes.
    pub fn uniform(m: usize, lambda: f64, p: f64) -> Result<Self, TvError> {
        Self::new(vec![(lambda, p); m])
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> (f64, f64) {
        self.pairs[k]
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }
}

/// Row-major strides for a dim list.
pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

impl TensorND {
    /// Wraps a flat buffer, checking the shape product, positivity of every
    /// dimension, and finiteness of every entry.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self, TvError> {
        if dims.is_empty() {
            return Err(TvError::InvalidParameter(
                "tensor needs at least one axis".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(TvError::InvalidParameter(
                "tensor dimensions must all be at least 1".into(),
            ));
        }
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| {
                TvError::InvalidParameter("tensor dimension product overflows".into())
            })?;
        if data.len() != expected {
            return Err(TvError::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(TvError::NonFinite { index });
        }
        Ok(Self { dims, data })
    }

    /// Constant-filled tensor of the given shape.
    pub fn constant(dims: Vec<usize>, value: f64) -> Result<Self, TvError> {
        let len = dims.iter().product();
        Self::new(dims, vec![value; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Reorders axes so that output axis `j` is input axis `perm[j]`.
    pub fn permute(&self, perm: &[usize]) -> Result<TensorND, TvError> {
        let m = self.dims.len();
        if perm.len() != m {
            return Err(TvError::LengthMismatch {
                expected: m,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; m];
        for &a in perm {
            if a >= m || seen[a] {
                return Err(TvError::InvalidParameter(format!(
                    "invalid axis permutation {perm:?}"
                )));
            }
            seen[a] = true;
        }
        let new_dims: Vec<usize> = perm.iter().map(|&a| self.dims[a]).collect();
        let old_strides = strides_of(&self.dims);
        let source_strides: Vec<usize> = perm.iter().map(|&a| old_strides[a]).collect();
        let mut out = vec![0.0; self.data.len()];
        let mut idx = vec![0usize; m];
        let mut src = 0usize;
        for slot in out.iter_mut() {
            *slot = self.data[src];
            for j in (0..m).rev() {
                idx[j] += 1;
                src += source_strides[j];
                if idx[j] < new_dims[j] {
                    break;
                }
                src -= new_dims[j] * source_strides[j];
                idx[j] = 0;
            }
        }
        Ok(TensorND {
            dims: new_dims,
            data: out,
        })
    }

    /// Enumerates the fibers along `axis` in ascending multi-index order
    /// over the remaining axes.
    pub fn fibers(&self, axis: usize) -> Result<Vec<FiberView>, TvError> {
        if axis >= self.ndim() {
            return Err(TvError::InvalidParameter(format!(
                "axis {axis} out of range for a {}-axis tensor",
                self.ndim()
            )));
        }
        let strides = strides_of(&self.dims);
        let other: Vec<usize> = (0..self.ndim()).filter(|&j| j != axis).collect();
        let count = self.len() / self.dims[axis];
        let mut views = Vec::with_capacity(count);
        let mut index = vec![0usize; other.len()];
        for _ in 0..count {
            let offset = index
                .iter()
                .zip(&other)
                .map(|(&i, &j)| i * strides[j])
                .sum();
            views.push(FiberView {
                axis,
                index: index.clone(),
                offset,
                stride: strides[axis],
            });
            for slot in (0..other.len()).rev() {
                index[slot] += 1;
                if index[slot] < self.dims[other[slot]] {
                    break;
                }
                index[slot] = 0;
            }
        }
        Ok(views)
    }

    /// Gathers one fiber into a contiguous vector.
    pub fn fiber_values(&self, view: &FiberView) -> Vec<f64> {
        (0..self.dims[view.axis])
            .map(|t| self.data[view.offset + t * view.stride])
            .collect()
    }
}

/// Decodes a flat fiber counter into the multi-index over the non-`axis`
/// axes, matching the order `fibers` enumerates them in.
pub(crate) fn decode_fiber_index(c: usize, dims: &[usize], axis: usize) -> Vec<usize> {
    let other: Vec<usize> = (0..dims.len()).filter(|&j| j != axis).collect();
    let mut index = vec![0usize; other.len()];
    let mut rem = c;
    for slot in (0..other.len()).rev() {
        let d = dims[other[slot]];
        index[slot] = rem % d;
        rem /= d;
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_shape_and_content() {
        assert!(TensorND::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(TensorND::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(TensorND::new(vec![2, 0], vec![]).is_err());
        assert!(TensorND::new(vec![], vec![]).is_err());
        assert!(TensorND::new(vec![2], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn permute_round_trips() {
        let t = TensorND::new(vec![2, 3, 4], (0..24).map(|v| v as f64).collect()).unwrap();
        let p = t.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.dims(), &[4, 2, 3]);
        let back = p.permute(&[1, 2, 0]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn permute_matches_manual_indexing() {
        let t = TensorND::new(vec![2, 3], vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]).unwrap();
        let p = t.permute(&[1, 0]).unwrap();
        assert_eq!(p.data(), &[0.0, 10.0, 1.0, 11.0, 2.0, 12.0]);
    }

    #[test]
    fn fibers_partition_the_tensor() {
        let t = TensorND::new(vec![2, 3, 4], (0..24).map(|v| v as f64).collect()).unwrap();
        for axis in 0..3 {
            let views = t.fibers(axis).unwrap();
            assert_eq!(views.len(), t.len() / t.dims()[axis]);
            let mut hit = vec![0usize; t.len()];
            for v in &views {
                for s in 0..t.dims()[axis] {
                    hit[v.offset + s * v.stride] += 1;
                }
            }
            assert!(hit.iter().all(|&h| h == 1), "axis {axis} partition broken");
        }
    }

    #[test]
    fn fiber_order_matches_the_permuted_chunks() {
        let t = TensorND::new(vec![2, 3, 4], (0..24).map(|v| (v * v) as f64).collect()).unwrap();
        for axis in 0..3 {
            let mut perm: Vec<usize> = (0..3).filter(|&j| j != axis).collect();
            perm.push(axis);
            let moved = t.permute(&perm).unwrap();
            let n_k = t.dims()[axis];
            for (c, view) in t.fibers(axis).unwrap().iter().enumerate() {
                assert_eq!(
                    t.fiber_values(view),
                    moved.data()[c * n_k..(c + 1) * n_k].to_vec(),
                    "axis {axis} fiber {c} order mismatch"
                );
                assert_eq!(view.index, decode_fiber_index(c, t.dims(), axis));
            }
        }
    }

    #[test]
    fn axis_spec_validates_pairs() {
        assert!(AxisSpec::new(vec![(0.5, 1.0), (0.0, f64::INFINITY)]).is_ok());
        assert!(AxisSpec::new(vec![(-0.1, 1.0)]).is_err());
        assert!(AxisSpec::new(vec![(0.1, 0.5)]).is_err());
        assert!(AxisSpec::new(vec![(f64::NAN, 1.0)]).is_err());
    }
}
