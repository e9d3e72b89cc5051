//! Spectral routines: one-sided Jacobi SVD, Moore–Penrose pseudoinverse,
//! power-iteration spectral norm, and a cyclic Jacobi symmetric
//! eigendecomposition. All deterministic.

use super::{dot, norm2, Matrix, NumericsError, Result};
use crate::scalar::Real;

/// Thin SVD A = U Σ Vᵀ with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Real> Svd<T> {
    /// Count of singular values above `rel_tol`·σ_max.
    pub fn rank(&self, rel_tol: T) -> usize {
        let smax = self.sigma.first().copied().unwrap_or_else(T::zero);
        self.sigma.iter().filter(|s| **s > rel_tol * smax).count()
    }
}

/// One-sided Jacobi SVD. Rotates column pairs of a working copy until all
/// columns are mutually orthogonal, accumulating the rotations into V.
pub fn jacobi_svd<T: Real>(a: &Matrix<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        // Work on the transpose and swap factors.
        let svd = jacobi_svd(&a.transpose());
        return Svd {
            u: svd.v,
            sigma: svd.sigma,
            v: svd.u,
        };
    }
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone(); // columns get rotated in place
    let mut v = Matrix::<T>::identity(n);
    let eps = T::of(1e-15);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    app = app + wp * wp;
                    aqq = aqq + wq * wq;
                    apq = apq + wp * wq;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq.abs() == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let s = if zeta >= T::zero() { T::one() } else { -T::one() };
                    s / (zeta.abs() + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<T> = (0..n)
        .map(|j| {
            let col: Vec<T> = (0..m).map(|i| w[(i, j)]).collect();
            norm2(&col)
        })
        .collect();
    // Sort descending, permuting U-columns (in w) and V alike.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut sig_sorted = vec![T::zero(); n];
    for (new_j, &old_j) in order.iter().enumerate() {
        let s = sigma[old_j];
        sig_sorted[new_j] = s;
        for i in 0..m {
            u[(i, new_j)] = if s > T::zero() { w[(i, old_j)] / s } else { T::zero() };
        }
        for i in 0..n {
            vs[(i, new_j)] = v[(i, old_j)];
        }
    }
    sigma = sig_sorted;
    Svd { u, sigma, v: vs }
}

/// Moore–Penrose pseudoinverse. Singular values below 1e-10·σ_max are
/// truncated, so a zero matrix maps to a zero pseudoinverse.
pub fn pinv<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    let svd = jacobi_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or_else(T::zero);
    let cutoff = T::of(1e-10) * smax;
    let n = a.cols();
    let m = a.rows();
    let mut out = Matrix::zeros(n, m);
    for (k, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s == T::zero() {
            continue;
        }
        let inv = T::one() / s;
        for i in 0..n {
            let vik = svd.v[(i, k)] * inv;
            for j in 0..m {
                out[(i, j)] = out[(i, j)] + vik * svd.u[(j, k)];
            }
        }
    }
    out
}

/// Deterministic start vector for power iteration (splitmix64 stream).
fn seeded_unit<T: Real>(n: usize) -> Vec<T> {
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        v.push(T::of((z >> 11) as f64 / (1u64 << 53) as f64 + 0.25));
    }
    let norm = norm2(&v);
    for x in &mut v {
        *x = *x / norm;
    }
    v
}

/// Largest singular value within relative tolerance `tol`, via power
/// iteration on AᵀA from a fixed-seed start vector.
pub fn spectral_norm<T: Real>(a: &Matrix<T>, tol: T) -> Result<T> {
    assert!(tol > T::zero(), "tolerance must be positive");
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(T::zero());
    }
    let mut v = seeded_unit::<T>(a.cols());
    let mut last = T::zero();
    let cap = 100_000;
    for it in 0..cap {
        let u = a.matvec(&v);
        let w = a.matvec_t(&u);
        let wnorm = norm2(&w);
        if wnorm == T::zero() {
            return Ok(T::zero()); // v in the null space and AᵀA v = 0 ⇒ σ estimate 0
        }
        let sigma = dot(&v, &w).max(T::zero()).sqrt();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / wnorm;
        }
        if it > 0 && (sigma - last).abs() <= tol * sigma.max(T::of(1e-300)) {
            return Ok(sigma);
        }
        last = sigma;
    }
    Err(NumericsError::NoConvergence {
        op: "spectral_norm",
        iterations: cap,
        last: last.to_f64().unwrap_or(f64::NAN),
    })
}

/// Symmetric eigendecomposition A = Q Λ Qᵀ (eigenvalues ascending) by
/// cyclic Jacobi rotations.
#[derive(Debug, Clone)]
pub struct SymEig<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>, // columns are eigenvectors
}

pub fn sym_eig<T: Real>(a: &Matrix<T>) -> SymEig<T> {
    assert_eq!(a.rows(), a.cols(), "sym_eig needs a square matrix");
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut q = Matrix::<T>::identity(n);
    let eps = T::of(1e-14);
    let scale = m.max_abs().max(T::of(1e-300));
    for _ in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= eps * scale {
            break;
        }
        for p in 0..n {
            for qi in (p + 1)..n {
                let apq = m[(p, qi)];
                if apq.abs() <= eps * scale {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(qi, qi)];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, qi)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, qi)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(qi, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(qi, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, qi)];
                    q[(k, p)] = c * qkp - s * qkq;
                    q[(k, qi)] = s * qkp + c * qkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values: Vec<T> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_j)] = q[(i, old_j)];
        }
    }
    SymEig { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn penrose_residuals(a: &Matrix<f64>, x: &Matrix<f64>) -> [f64; 4] {
        let axa = a.matmul(x).matmul(a).sub(a).frobenius_norm();
        let xax = x.matmul(a).matmul(x).sub(x).frobenius_norm();
        let ax = a.matmul(x);
        let sym1 = ax.sub(&ax.transpose()).frobenius_norm();
        let xa = x.matmul(a);
        let sym2 = xa.sub(&xa.transpose()).frobenius_norm();
        [axa, xax, sym1, sym2]
    }

    #[test]
    fn pinv_identity_and_diagonal() {
        let i2 = Matrix::<f64>::identity(2);
        assert!(pinv(&i2).sub(&i2).frobenius_norm() < 1e-12);
        let d = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        let expect = Matrix::from_rows(&[&[0.5, 0.0], &[0.0, 0.0]]);
        assert!(pinv(&d).sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn pinv_penrose_on_random_full_rank() {
        let mut s = 1234u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Matrix::from_fn(5, 3, |_, _| next());
        let x = pinv(&a);
        for r in penrose_residuals(&a, &x) {
            assert!(r <= 1e-8, "penrose residual {r}");
        }
    }

    #[test]
    fn pinv_zero_matrix() {
        let z = Matrix::<f64>::zeros(3, 2);
        assert_eq!(pinv(&z), Matrix::<f64>::zeros(2, 3));
    }

    #[test]
    fn spectral_norm_diagonal_and_nilpotent() {
        let d = Matrix::<f64>::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        assert!((spectral_norm(&d, 1e-12).unwrap() - 3.0).abs() < 1e-9);
        // [[0,1],[0,0]] has singular values {1, 0}
        let n = Matrix::<f64>::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((spectral_norm(&n, 1e-12).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        let mut s = 99u64;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = Matrix::from_fn(6, 6, |_, _| next());
        let by_power = spectral_norm(&a, 1e-10).unwrap();
        let by_svd = jacobi_svd(&a).sigma[0];
        assert!(
            (by_power - by_svd).abs() <= 1e-6 * by_svd,
            "power {by_power} vs svd {by_svd}"
        );
    }

    #[test]
    fn spectral_norm_transpose_invariant() {
        let a = Matrix::<f64>::from_rows(&[&[1.0, 2.0, 0.0], &[0.5, -1.0, 4.0]]);
        let n1 = spectral_norm(&a, 1e-12).unwrap();
        let n2 = spectral_norm(&a.transpose(), 1e-12).unwrap();
        assert!((n1 - n2).abs() <= 1e-9 * n1.max(1.0));
    }

    #[test]
    fn sym_eig_reconstructs() {
        let a = Matrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 0.5], &[0.0, 0.5, 1.0]]);
        let eig = sym_eig(&a);
        let lam = Matrix::from_fn(3, 3, |i, j| if i == j { eig.values[i] } else { 0.0 });
        let rec = eig.vectors.matmul(&lam).matmul(&eig.vectors.transpose());
        assert!(rec.sub(&a).frobenius_norm() < 1e-10);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_ranks_across_deficiencies() {
        // rank 0, 1, 2 out of a 4x3 shape
        let z = Matrix::<f64>::zeros(4, 3);
        assert_eq!(jacobi_svd(&z).rank(1e-10), 0);
        let one = Matrix::from_fn(4, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        assert_eq!(jacobi_svd(&one).rank(1e-10), 1);
        let two = Matrix::from_fn(4, 3, |i, j| ((i + 1) * (j + 1)) as f64 + (i as f64) * (j as f64) * (j as f64));
        assert_eq!(jacobi_svd(&two).rank(1e-10), 2);
    }
}
