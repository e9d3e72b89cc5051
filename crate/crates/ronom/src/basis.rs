//! Gaussian basis on [0,1]^d: construction, pointwise evaluation, and the
//! assembly of the Gram matrix Φ, the composite regularization matrix L,
//! and the measurement matrix M_φ.
//!
//! Centers sit on the uniform grid with spacing Δx = 1/S, extended by N_p
//! exterior centers per edge; the width σ = 1/(S·√(2 ln 2)) makes each
//! Gaussian equal 0.5 at distance Δx from its center. 2D matrices factor
//! over axes, so every entry reduces to products of 1D quadratures — the
//! values are identical to assembling the full tensor rule directly.

use crate::numerics::{jacobi_svd, Matrix};
use crate::quadrature::{gauss_legendre, kahan_sum, TensorGrid};
use crate::MatF;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("basis numerically dependent: Gram–Schmidt pivot {index} below tolerance")]
    NumericallyDependent { index: usize },
    #[error("grid-sample measurement requires a reference grid")]
    MissingRefGrid,
    #[error("basis dimension must be 1 or 2, got {0}")]
    BadDim(usize),
}

/// Gaussian basis over [0,1]^dim with padded exterior centers.
#[derive(Debug, Clone)]
pub struct BasisSet {
    dim: usize,
    grid_size: usize, // S: spacing is 1/S, interior grid has S+1 points per axis
    padding: usize,   // N_p exterior centers per edge
    sigma: f64,
    axis_centers: Vec<f64>, // S+1+2·N_p increasing values, shared by all axes
}

/// Builds the basis: interior centers on the (S+1)-point uniform grid plus
/// N_p exterior centers beyond each edge, tensorized over `dim` axes;
/// σ = 1/(S·√(2 ln 2)) so each Gaussian equals 0.5 at distance 1/S.
pub fn build_basis(dim: usize, s: usize, n_p: usize) -> Result<BasisSet, BasisError> {
    if dim == 0 || dim > 2 {
        return Err(BasisError::BadDim(dim));
    }
    assert!(s >= 2, "grid size must be at least 2");
    let dx = 1.0 / s as f64;
    let n_axis = s + 1 + 2 * n_p;
    let mut axis_centers = Vec::with_capacity(n_axis);
    for k in (1..=n_p).rev() {
        axis_centers.push(-(k as f64) * dx);
    }
    for i in 0..=s {
        axis_centers.push(i as f64 * dx);
    }
    for k in 1..=n_p {
        axis_centers.push(1.0 + k as f64 * dx);
    }
    let sigma = 1.0 / (s as f64 * (2.0 * std::f64::consts::LN_2).sqrt());
    Ok(BasisSet {
        dim,
        grid_size: s,
        padding: n_p,
        sigma,
        axis_centers,
    })
}

impl BasisSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Centers per axis, increasing.
    pub fn axis_centers(&self) -> &[f64] {
        &self.axis_centers
    }

    /// Total number of basis functions (S+1+2·N_p)^dim.
    pub fn n_basis(&self) -> usize {
        self.axis_centers.len().pow(self.dim as u32)
    }

    /// All centers, flattened row-major (last axis fastest).
    pub fn centers(&self) -> Vec<f64> {
        match self.dim {
            1 => self.axis_centers.clone(),
            2 => {
                let n = self.axis_centers.len();
                let mut out = Vec::with_capacity(n * n * 2);
                for &c1 in &self.axis_centers {
                    for &c2 in &self.axis_centers {
                        out.push(c1);
                        out.push(c2);
                    }
                }
                out
            }
            _ => unreachable!(),
        }
    }

    /// The interior (S+1)-points-per-axis training grid.
    pub fn interior_grid(&self) -> TensorGrid {
        TensorGrid::uniform_unit(self.dim, self.grid_size + 1)
    }

    /// Boundary points of the interior grid (Dirichlet collocation set).
    /// In 1D the two endpoints; in 2D every grid point on an edge.
    pub fn boundary_points(&self) -> Vec<f64> {
        let grid = self.interior_grid();
        match self.dim {
            1 => vec![0.0, 1.0],
            2 => {
                let pts = grid.points();
                let mut out = Vec::new();
                for i in 0..grid.len() {
                    let x = pts[2 * i];
                    let y = pts[2 * i + 1];
                    if x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0 {
                        out.push(x);
                        out.push(y);
                    }
                }
                out
            }
            _ => unreachable!(),
        }
    }
}

/// Unnormalized Gaussian bump exp(−‖x − c‖²/(2σ²)).
pub fn gaussian(center: &[f64], sigma: f64, x: &[f64]) -> f64 {
    debug_assert_eq!(center.len(), x.len());
    let r2: f64 = center
        .iter()
        .zip(x)
        .map(|(c, xi)| (xi - c) * (xi - c))
        .sum();
    (-r2 / (2.0 * sigma * sigma)).exp()
}

/// Evaluation matrix Φ̃ with Φ̃_ij = φ_i(x_j); points flattened (n·dim).
pub fn eval_basis(b: &BasisSet, points: &[f64]) -> MatF {
    let dim = b.dim;
    assert_eq!(points.len() % dim, 0, "points length must be n·dim");
    let n_pts = points.len() / dim;
    let n_axis = b.axis_centers.len();
    match dim {
        1 => Matrix::from_fn(b.n_basis(), n_pts, |i, j| {
            gaussian(&[b.axis_centers[i]], b.sigma, &[points[j]])
        }),
        2 => Matrix::from_fn(b.n_basis(), n_pts, |i, j| {
            let c = [b.axis_centers[i / n_axis], b.axis_centers[i % n_axis]];
            gaussian(&c, b.sigma, &points[2 * j..2 * j + 2])
        }),
        _ => unreachable!(),
    }
}

/// 1D composite Gauss–Legendre nodes/weights over [0,1]; `quad_order` is
/// the node count per cell (exact for polynomial degree 2·quad_order − 1).
fn axis_rule(quad_order: usize, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre::<f64>(quad_order.max(1));
    let h = 1.0 / cells as f64;
    let mut xs = Vec::with_capacity(cells * gx.len());
    let mut ws = Vec::with_capacity(cells * gx.len());
    for c in 0..cells {
        let lo = c as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Per-axis building blocks: G = ⟨φ_i, φ_j⟩, D = ⟨φ_i'', φ_j⟩,
/// H = ⟨φ_i'', φ_j''⟩, all over [0,1]. D is not symmetric (boundary terms).
struct AxisMatrices {
    g: MatF,
    d: MatF,
    h: MatF,
}

fn axis_matrices(b: &BasisSet, quad_order: usize, cells: usize) -> AxisMatrices {
    let (xs, ws) = axis_rule(quad_order, cells);
    let n = b.axis_centers.len();
    let s2 = b.sigma * b.sigma;
    // Tabulate values and second derivatives at quadrature nodes.
    let mut val = Matrix::zeros(n, xs.len());
    let mut dd = Matrix::zeros(n, xs.len());
    for i in 0..n {
        let c = b.axis_centers[i];
        for (q, &x) in xs.iter().enumerate() {
            let g = gaussian(&[c], b.sigma, &[x]);
            let t = x - c;
            val[(i, q)] = g;
            dd[(i, q)] = g * (t * t / (s2 * s2) - 1.0 / s2);
        }
    }
    let quad_pair = |a: &MatF, bm: &MatF, i: usize, j: usize| {
        kahan_sum((0..xs.len()).map(|q| ws[q] * a[(i, q)] * bm[(j, q)]))
    };
    let g = Matrix::from_fn(n, n, |i, j| quad_pair(&val, &val, i, j)).symmetrized();
    let d = Matrix::from_fn(n, n, |i, j| quad_pair(&dd, &val, i, j));
    let h = Matrix::from_fn(n, n, |i, j| quad_pair(&dd, &dd, i, j)).symmetrized();
    AxisMatrices { g, d, h }
}

/// Gram matrix Φ_ij = ∫_Ω φ_i φ_j, by composite tensor Gauss–Legendre with
/// `quad_order` nodes per cell and axis and `cells_per_axis` cells per axis.
pub fn gram_l2(b: &BasisSet, quad_order: usize, cells_per_axis: usize) -> MatF {
    let ax = axis_matrices(b, quad_order, cells_per_axis);
    match b.dim {
        1 => ax.g,
        2 => {
            let n = b.axis_centers.len();
            Matrix::from_fn(n * n, n * n, |i, j| {
                let (i1, i2) = (i / n, i % n);
                let (j1, j2) = (j / n, j % n);
                ax.g[(i1, j1)] * ax.g[(i2, j2)]
            })
        }
        _ => unreachable!(),
    }
}

/// Laplacian Gram matrix ⟨Δφ_i, Δφ_j⟩ over Ω from analytic Gaussian
/// second derivatives and the per-axis quadratures.
pub fn laplacian_gram(b: &BasisSet, quad_order: usize, cells_per_axis: usize) -> MatF {
    let ax = axis_matrices(b, quad_order, cells_per_axis);
    match b.dim {
        1 => ax.h,
        2 => {
            let n = b.axis_centers.len();
            Matrix::from_fn(n * n, n * n, |i, j| {
                let (i1, i2) = (i / n, i % n);
                let (j1, j2) = (j / n, j % n);
                ax.h[(i1, j1)] * ax.g[(i2, j2)]
                    + ax.g[(i1, j1)] * ax.h[(i2, j2)]
                    + ax.d[(i1, j1)] * ax.d[(j2, i2)]
                    + ax.d[(j1, i1)] * ax.d[(i2, j2)]
            })
            .symmetrized()
        }
        _ => unreachable!(),
    }
}

/// Composite regularizer weights and boundary collocation points.
#[derive(Debug, Clone)]
pub struct RegularizerSpec {
    /// Weight of the orthonormality penalty.
    pub gamma1: f64,
    /// Weight of the boundary-condition penalty.
    pub gamma2: f64,
    /// Boundary collocation points (flattened, dim-major); the boundary
    /// operator is the identity trace (Dirichlet residual u(x_b)).
    pub bc_points: Vec<f64>,
}

impl RegularizerSpec {
    /// Laplacian-only regularizer.
    pub fn laplacian_only() -> Self {
        RegularizerSpec {
            gamma1: 0.0,
            gamma2: 0.0,
            bc_points: Vec::new(),
        }
    }
}

/// Coefficient-space matrix of the orthonormality penalty: with G the
/// Gram–Schmidt change of basis into an L2-orthonormal frame, the penalty is
/// ‖L₁u‖² = aᵀ(GᵀG)a. Uses re-orthogonalized (modified) Gram–Schmidt in the
/// Φ inner product; in exact arithmetic GᵀG equals Φ.
pub fn ortho_penalty(phi: &MatF) -> Result<MatF, BasisError> {
    let n = phi.rows();
    let phi_dot = |a: &[f64], bv: &[f64]| -> f64 {
        let pa = phi.matvec(bv);
        crate::numerics::dot(a, &pa)
    };
    // Columns of C: coefficients of the orthonormalized functions. MGS over
    // the unit coefficient vectors keeps C upper triangular.
    let mut c = Matrix::<f64>::zeros(n, n);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for _pass in 0..2 {
            for q in cols.iter().take(k) {
                let r = phi_dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= r * qi;
                }
            }
        }
        let norm2 = phi_dot(&v, &v);
        let scale = phi[(k, k)].abs().max(1e-300);
        if !(norm2 > 1e-26 * scale) {
            return Err(BasisError::NumericallyDependent { index: k });
        }
        let norm = norm2.sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        for i in 0..n {
            c[(i, k)] = v[i];
        }
        cols.push(v);
    }
    // G = C⁻¹ by back substitution on the upper-triangular C.
    let mut g = Matrix::<f64>::zeros(n, n);
    for col in 0..n {
        let mut x = vec![0.0; n];
        x[col] = 1.0;
        for row in (0..n).rev() {
            let mut acc = x[row];
            for k in (row + 1)..n {
                acc -= c[(row, k)] * x[k];
            }
            x[row] = acc / c[(row, row)];
        }
        for row in 0..n {
            g[(row, col)] = x[row];
        }
    }
    Ok(g.transpose().matmul(&g).symmetrized())
}

/// Assembles L = L_Δ + γ₁·L_ortho + γ₂·L_bc in coefficient space.
pub fn reg_matrix(
    b: &BasisSet,
    spec: &RegularizerSpec,
    quad_order: usize,
) -> Result<MatF, BasisError> {
    let cells = b.grid_size;
    let mut l = laplacian_gram(b, quad_order, cells);
    if spec.gamma1 != 0.0 {
        let phi = gram_l2(b, quad_order, cells);
        let ortho = ortho_penalty(&phi)?;
        l = l.add(&ortho.scale(spec.gamma1));
    }
    if spec.gamma2 != 0.0 && !spec.bc_points.is_empty() {
        let ev = eval_basis(b, &spec.bc_points);
        let bc = ev.matmul(&ev.transpose());
        l = l.add(&bc.scale(spec.gamma2));
    }
    Ok(l.symmetrized())
}

/// How the projected function is turned into the encoder input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MeasurementMode {
    /// Sample the projection on a reference grid.
    GridSample,
    /// Pass the basis coefficients through unchanged.
    Coefficients,
}

/// Measurement matrix M_φ (d_m × N_b) together with its numerical rank.
/// Rank deficiency (d_m < N_b, or padded centers invisible to the grid) is
/// reported, not fatal.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub matrix: MatF,
    pub rank: usize,
}

pub fn measurement_matrix(
    b: &BasisSet,
    mode: MeasurementMode,
    ref_grid: Option<&TensorGrid>,
) -> Result<Measurement, BasisError> {
    match mode {
        MeasurementMode::Coefficients => Ok(Measurement {
            matrix: Matrix::identity(b.n_basis()),
            rank: b.n_basis(),
        }),
        MeasurementMode::GridSample => {
            let grid = ref_grid.ok_or(BasisError::MissingRefGrid)?;
            let matrix = eval_basis(b, &grid.points()).transpose();
            // Both the centers and the reference grid are tensor products of
            // per-axis sets, so M_φ is a Kronecker product of the per-axis
            // evaluation matrices and its rank is the product of their ranks.
            let mut rank = 1usize;
            for d in 0..b.dim {
                let axis_pts = grid.axis(d);
                let a = Matrix::from_fn(axis_pts.len(), b.axis_centers.len(), |i, j| {
                    gaussian(&[b.axis_centers[j]], b.sigma, &[axis_pts[i]])
                });
                rank *= jacobi_svd(&a).rank(1e-10);
            }
            Ok(Measurement { matrix, rank })
        }
    }
}
