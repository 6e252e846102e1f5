//! Minimal complex vector helpers and the operator abstraction shared by the
//! Lanczos, moment and propagation kernels.

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A Hermitian linear map acting on `C^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. Both slices have length `dim()`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    /// Checked application.
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut y);
        Ok(y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply_into(x, y)
    }
}

/// `⟨x|y⟩`, antilinear in the first argument.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * b;
    }
    acc
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    norm_sqr(x).sqrt()
}

pub fn normalize(x: &mut [C64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        let inv = 1.0 / n;
        for v in x.iter_mut() {
            *v *= inv;
        }
    }
    n
}

/// `(A - shift) / scale`.
pub struct Rescaled<O> {
    pub inner: O,
    pub scale: f64,
    pub shift: f64,
}

impl<O: LinearOperator> LinearOperator for Rescaled<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        self.inner.apply_into(x, y);
        let inv = 1.0 / self.scale;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = (*yi - xi * self.shift) * inv;
        }
    }
}

/// Dense operator, mostly for tests and small reference problems.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        DenseOperator { matrix }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        DenseOperator { matrix: m }
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let n = self.dim();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.matrix[(i, j)] * x[j];
            }
            *yi = acc;
        }
    }
}

/// Materialize an operator column by column.
pub fn to_dense<O: LinearOperator + ?Sized>(op: &O) -> DMatrix<C64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        op.apply_into(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_is_antilinear_in_first() {
        let x = [C64::new(0.0, 1.0)];
        let y = [C64::new(1.0, 0.0)];
        assert_eq!(dot(&x, &y), C64::new(0.0, -1.0));
    }

    #[test]
    fn rescaled_diagonal() {
        let op = Rescaled {
            inner: DenseOperator::diagonal(&[-1.0, 0.0, 3.0]),
            scale: 2.0,
            shift: 1.0,
        };
        let d = to_dense(&op);
        assert_eq!(d[(0, 0)].re, -1.0);
        assert_eq!(d[(1, 1)].re, -0.5);
        assert_eq!(d[(2, 2)].re, 1.0);
    }

    #[test]
    fn checked_apply() {
        let op = DenseOperator::diagonal(&[1.0, 2.0]);
        assert!(matches!(
            op.apply(&[C64::new(1.0, 0.0)]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }
}
