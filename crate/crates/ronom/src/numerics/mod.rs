//! Dense linear-algebra kernel shared by all modules.
//!
//! Row-major [`Matrix`] over a generic [`Scalar`](crate::scalar::Scalar),
//! pivoted elimination for any field, and floating-point factorizations
//! (Cholesky with jitter escalation, one-sided Jacobi SVD, power iteration)
//! for [`Real`](crate::scalar::Real) scalars. Everything is deterministic:
//! no randomized pivoting, fixed iteration orders, fixed-seed start vectors.

mod factor;
mod svd;

pub use factor::{cholesky, lu_solve, solve_spd, CholeskyFactor};
pub use svd::{jacobi_svd, pinv, spectral_norm, sym_eig, Svd, SymEig};

use crate::scalar::Scalar;
use std::fmt;
use thiserror::Error;

/// Vectors are plain owned slices; operations take `&[T]`.
pub type Vector<T> = Vec<T>;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("matrix not positive definite: pivot {pivot} non-positive after jitter escalation")]
    NotPositiveDefinite { pivot: usize },
    #[error("singular matrix in {op}: pivot {pivot} is zero")]
    Singular { op: &'static str, pivot: usize },
    #[error("{op} did not converge within {iterations} iterations; last iterate {last}")]
    NoConvergence {
        op: &'static str,
        iterations: usize,
        last: f64,
    },
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    ShapeMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },
    #[error("matrix not symmetric within {tol}: max asymmetry {found}")]
    NotSymmetric { tol: f64, found: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from a nested array literal; rows must have equal length.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "entry count mismatch");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matvec(&self, x: &[T]) -> Vector<T> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a.clone() * b.clone();
            }
            y[i] = acc;
        }
        y
    }

    /// y = Aᵀ x without forming the transpose.
    pub fn matvec_t(&self, x: &[T]) -> Vector<T> {
        assert_eq!(self.rows, x.len(), "matvec_t dimension mismatch");
        let mut y = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            for (j, a) in row.iter().enumerate() {
                y[j] += a.clone() * x[i].clone();
            }
        }
        y
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)].clone();
                if aik.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow.iter()) {
                    *o += aik.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() + other[(i, j)].clone()
        })
    }

    pub fn sub(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() - other[(i, j)].clone()
        })
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].clone() * s.clone())
    }

    /// A + s·I on the diagonal.
    pub fn add_diag(&self, s: T) -> Matrix<T> {
        let mut m = self.clone();
        let n = self.rows.min(self.cols);
        for i in 0..n {
            m[(i, i)] += s.clone();
        }
        m
    }
}

impl<T: crate::scalar::Real> Matrix<T> {
    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, x| acc + *x * *x)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, x| acc.max(x.abs()))
    }

    /// Largest |A_ij − A_ji|.
    pub fn asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// (A + Aᵀ)/2; used after quadrature assembly to remove rounding skew.
    pub fn symmetrized(&self) -> Matrix<T> {
        assert_eq!(self.rows, self.cols);
        let half = T::of(0.5);
        Matrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)]) * half
        })
    }

    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].is_finite() {
                    return Err(NumericsError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{:>14} ", self.data[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Euclidean norm of a slice.
pub fn norm2<T: crate::scalar::Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}

/// Dot product of two slices.
pub fn dot<T: crate::scalar::Real>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let b = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(a.matmul(&b), a);
        let at = a.transpose();
        assert_eq!(at.rows(), 2);
        assert_eq!(at[(0, 2)], 5.0);
    }

    #[test]
    fn matvec_matches_matmul() {
        let a = Matrix::from_rows(&[&[2.0, -1.0, 0.5], &[0.0, 3.0, 1.0]]);
        let x = vec![1.0, 2.0, 4.0];
        let y = a.matvec(&x);
        assert_eq!(y, vec![2.0, 10.0]);
        let yt = a.matvec_t(&[1.0, 1.0]);
        assert_eq!(yt, vec![2.0, 2.0, 1.5]);
    }
}
