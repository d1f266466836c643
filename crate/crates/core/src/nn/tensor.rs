use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{NnError, Rng};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::LengthMismatch {
                left: rows * cols,
                right: data.len(),
            });
        }
        let t = Self { rows, cols, data };
        t.check_finite()?;
        Ok(t)
    }

    /// Entries drawn independently from `U[-bound, bound]`.
    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn check_finite(&self) -> Result<(), NnError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(NnError::NonFinite {
                index,
                value: self.data[index],
            }),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// SHA-256 over the shape and the little-endian bit patterns of every entry.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        self.feed_hash(&mut hasher);
        hex::encode(hasher.finalize())
    }

    pub(crate) fn feed_hash(&self, hasher: &mut Sha256) {
        hasher.update((self.rows as u64).to_le_bytes());
        hasher.update((self.cols as u64).to_le_bytes());
        for v in &self.data {
            hasher.update(v.to_bits().to_le_bytes());
        }
    }

    /// `self = beta * self + op(a) * op(b)` where `op` optionally transposes.
    pub fn gemm(
        &mut self,
        a: &Tensor2,
        transpose_a: bool,
        b: &Tensor2,
        transpose_b: bool,
        beta: f64,
    ) {
        let (m, k) = if transpose_a {
            (a.cols, a.rows)
        } else {
            (a.rows, a.cols)
        };
        let (kb, n) = if transpose_b {
            (b.cols, b.rows)
        } else {
            (b.rows, b.cols)
        };
        assert_eq!(k, kb, "gemm inner dimension mismatch");
        assert_eq!((m, n), (self.rows, self.cols), "gemm output shape mismatch");
        if m == 0 || n == 0 {
            return;
        }
        if k == 0 {
            self.data.iter_mut().for_each(|v| *v *= beta);
            return;
        }
        let (rsa, csa) = if transpose_a {
            (1, a.cols as isize)
        } else {
            (a.cols as isize, 1)
        };
        let (rsb, csb) = if transpose_b {
            (1, b.cols as isize)
        } else {
            (b.cols as isize, 1)
        };
        // SAFETY: strides and extents are derived from the owning tensors and
        // checked above; `self` does not alias `a` or `b` (distinct borrows).
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.data.as_ptr(),
                rsa,
                csa,
                b.data.as_ptr(),
                rsb,
                csb,
                beta,
                self.data.as_mut_ptr(),
                self.cols as isize,
                1,
            );
        }
    }

    /// `out += self * x`
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += dot(row, x);
        }
    }

    /// `out += selfᵀ * x`
    pub fn matvec_t_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (&xi, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
            if xi != 0.0 {
                for (o, r) in out.iter_mut().zip(row) {
                    *o += xi * r;
                }
            }
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A named trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor2,
    #[serde(skip, default = "empty_grad")]
    pub grad: Tensor2,
}

fn empty_grad() -> Tensor2 {
    Tensor2::zeros(0, 0)
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor2) -> Self {
        let grad = Tensor2::zeros(value.rows(), value.cols());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor2::zeros(self.value.rows(), self.value.cols());
        } else {
            self.grad.fill(0.0);
        }
    }

    pub fn len(&self) -> usize {
        self.value.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Tensor2, ta: bool, b: &Tensor2, tb: bool) -> Tensor2 {
        let at = |i: usize, j: usize| if ta { a.get(j, i) } else { a.get(i, j) };
        let bt = |i: usize, j: usize| if tb { b.get(j, i) } else { b.get(i, j) };
        let (m, k) = if ta { (a.cols(), a.rows()) } else { a.shape() };
        let n = if tb { b.rows() } else { b.cols() };
        let mut c = Tensor2::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..k {
                    s += at(i, l) * bt(l, j);
                }
                c.set(i, j, s);
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive_in_all_transpose_modes() {
        let mut rng = Rng::new(3);
        for &(ta, tb) in &[(false, false), (true, false), (false, true), (true, true)] {
            let a = if ta {
                Tensor2::uniform(4, 3, 1.0, &mut rng)
            } else {
                Tensor2::uniform(3, 4, 1.0, &mut rng)
            };
            let b = if tb {
                Tensor2::uniform(5, 4, 1.0, &mut rng)
            } else {
                Tensor2::uniform(4, 5, 1.0, &mut rng)
            };
            let mut c = Tensor2::uniform(3, 5, 1.0, &mut rng);
            let prior = c.clone();
            c.gemm(&a, ta, &b, tb, 1.0);
            let expect = naive(&a, ta, &b, tb);
            for i in 0..3 {
                for j in 0..5 {
                    assert!((c.get(i, j) - prior.get(i, j) - expect.get(i, j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn matvec_variants() {
        let a = Tensor2::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = vec![0.0; 2];
        a.matvec_acc(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, vec![-2.0, -2.0]);
        let mut out_t = vec![1.0; 3];
        a.matvec_t_acc(&[1.0, 1.0], &mut out_t);
        assert_eq!(out_t, vec![6.0, 8.0, 10.0]);
    }

    #[test]
    fn rejects_bad_length_and_non_finite() {
        assert!(matches!(
            Tensor2::from_vec(2, 2, vec![0.0; 3]),
            Err(NnError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Tensor2::from_vec(1, 2, vec![0.0, f64::NAN]),
            Err(NnError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn hash_tracks_bits() {
        let a = Tensor2::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        b.set(0, 0, -0.0);
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
