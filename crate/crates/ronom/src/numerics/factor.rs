//! Direct solvers: Cholesky with jitter escalation and pivoted elimination.

use super::{Matrix, NumericsError, Result, Vector};
use crate::scalar::{Real, Scalar};

/// Lower-triangular Cholesky factor of an SPD matrix, with the jitter that
/// was added to the diagonal (zero when none was needed).
#[derive(Debug, Clone)]
pub struct CholeskyFactor<T> {
    lower: Matrix<T>,
    pub jitter: T,
}

impl<T: Real> CholeskyFactor<T> {
    pub fn n(&self) -> usize {
        self.lower.rows()
    }

    /// Solves L Lᵀ x = b by forward/back substitution.
    pub fn solve(&self, b: &[T]) -> Vector<T> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc = acc - l[(i, k)] * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc = acc - l[(k, i)] * y[k];
            }
            y[i] = acc / l[(i, i)];
        }
        y
    }

    /// Solves for several right-hand sides given as matrix columns.
    pub fn solve_mat(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![T::zero(); b.rows()];
        for j in 0..b.cols() {
            for i in 0..b.rows() {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..b.rows() {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

fn cholesky_attempt<T: Real>(a: &Matrix<T>, jitter: T) -> std::result::Result<Matrix<T>, usize> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            if i == j {
                sum = sum + jitter;
            }
            for k in 0..j {
                sum = sum - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= T::zero() || !sum.is_finite() {
                    return Err(i);
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Cholesky factorization with diagonal jitter escalation.
///
/// Gram matrices of near-collinear Gaussians are ill-conditioned, so a
/// failed factorization retries with jitter 1e-12·d, 1e-10·d, …, 1e-6·d
/// (d = largest diagonal entry) before giving up.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<CholeskyFactor<T>> {
    assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
    let diag_scale = (0..a.rows())
        .map(|i| a[(i, i)].abs())
        .fold(T::zero(), T::max)
        .max(T::one());
    let mut last_pivot = 0;
    for level in [0.0, 1e-12, 1e-10, 1e-8, 1e-6] {
        let jitter = T::of(level) * diag_scale;
        match cholesky_attempt(a, jitter) {
            Ok(lower) => return Ok(CholeskyFactor { lower, jitter }),
            Err(pivot) => last_pivot = pivot,
        }
    }
    Err(NumericsError::NotPositiveDefinite { pivot: last_pivot })
}

/// Solves A x = b for symmetric positive-definite A.
///
/// Checks symmetry within 1e-10 (relative to the largest entry), factors with
/// [`cholesky`], and applies one step of iterative refinement so the residual
/// meets ‖Ax − b‖₂ ≤ 1e-8·(1 + ‖b‖₂).
pub fn solve_spd<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vector<T>> {
    if a.rows() != a.cols() || a.rows() != b.len() {
        return Err(NumericsError::ShapeMismatch {
            op: "solve_spd",
            lhs: format!("{}x{}", a.rows(), a.cols()),
            rhs: format!("{}", b.len()),
        });
    }
    a.check_finite()?;
    let scale = a.max_abs().max(T::one());
    let asym = a.asymmetry();
    let tol = T::of(1e-10) * scale;
    if asym > tol {
        return Err(NumericsError::NotSymmetric {
            tol: tol.to_f64().unwrap_or(f64::NAN),
            found: asym.to_f64().unwrap_or(f64::NAN),
        });
    }
    let factor = cholesky(a)?;
    let mut x = factor.solve(b);
    // One refinement pass tightens the residual on ill-conditioned systems.
    for _ in 0..2 {
        let r: Vec<T> = a
            .matvec(&x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| *bi - *ax)
            .collect();
        let rnorm = super::norm2(&r);
        let bound = T::of(1e-9) * (T::one() + super::norm2(b));
        if rnorm <= bound {
            break;
        }
        let d = factor.solve(&r);
        for (xi, di) in x.iter_mut().zip(d) {
            *xi = *xi + di;
        }
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting, generic over any ordered
/// field. Runs identically on `f64` and on exact rationals, which is what
/// the extended-precision test oracles instantiate it with.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vector<T>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(NumericsError::ShapeMismatch {
            op: "lu_solve",
            lhs: format!("{}x{}", a.rows(), a.cols()),
            rhs: format!("{}", b.len()),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = m[(col, col)].abs();
        for r in (col + 1)..n {
            let mag = m[(r, col)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag.is_zero() {
            return Err(NumericsError::Singular {
                op: "lu_solve",
                pivot: col,
            });
        }
        if pivot_row != col {
            for c in 0..n {
                let tmp = m[(col, c)].clone();
                m[(col, c)] = m[(pivot_row, c)].clone();
                m[(pivot_row, c)] = tmp;
            }
            x.swap(col, pivot_row);
        }
        let pivot = m[(col, col)].clone();
        for r in (col + 1)..n {
            let factor = m[(r, col)].clone() / pivot.clone();
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let sub = factor.clone() * m[(col, c)].clone();
                m[(r, c)] -= sub;
            }
            let sub = factor * x[col].clone();
            x[r] -= sub;
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row].clone();
        for c in (row + 1)..n {
            acc = acc - m[(row, c)].clone() * x[c].clone();
        }
        x[row] = acc / m[(row, row)].clone();
    }
    Ok(x)
}
