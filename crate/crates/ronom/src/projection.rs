//! Regularized L2 projection onto the Gaussian basis, its
//! discretize-then-optimize counterpart, the coefficient error bound
//! between them, and projection onto a finite frame via the pseudoinverse.
//!
//! Continuous normal equations: (Φ + λL) α† = ⟨f, φ⟩.
//! Discrete normal equations:   (Φ̃ D_w Φ̃ᵀ + λL) α = Φ̃ D_w f.

use crate::basis::{eval_basis, gaussian, gram_l2, BasisSet};
use crate::numerics::{
    cholesky, pinv, spectral_norm, sym_eig, CholeskyFactor, Matrix, NumericsError,
};
use crate::quadrature::{gauss_legendre, grid_weights, kahan_sum, TensorGrid};
use crate::{MatF, VecF};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("regularization weight λ must be positive, got {0}")]
    LambdaNotPositive(f64),
    #[error("regularization matrix L is singular (smallest eigenvalue {min_eig})")]
    SingularL { min_eig: f64 },
    #[error("sample set inconsistent: {0}")]
    BadSamples(String),
}

pub type Result<T> = std::result::Result<T, ProjectionError>;

/// Point locations, function values, and quadrature weights of a
/// discretized input {x_i, f_i, w_i}.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub dim: usize,
    /// Flattened locations, length n·dim.
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() * dim || values.len() != weights.len() {
            return Err(ProjectionError::BadSamples(format!(
                "lengths: points {} values {} weights {} dim {}",
                points.len(),
                values.len(),
                weights.len(),
                dim
            )));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(ProjectionError::BadSamples(
                "negative quadrature weight".into(),
            ));
        }
        Ok(SampleSet {
            dim,
            points,
            values,
            weights,
        })
    }

    /// Samples of a function on a tensor grid, with trapezoid-type weights.
    pub fn on_grid(grid: &TensorGrid, values: Vec<f64>) -> Result<Self> {
        let weights = grid_weights(grid);
        Self::new(grid.dim(), grid.points(), values, weights)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Basis coefficients of a projected function.
#[derive(Debug, Clone)]
pub struct Coefficients<'a> {
    pub alpha: VecF,
    pub basis: &'a BasisSet,
}

impl Coefficients<'_> {
    /// Reconstruct function values Σ αᵢ φᵢ(x) at the given points.
    pub fn eval(&self, points: &[f64]) -> VecF {
        eval_basis(self.basis, points).matvec_t(&self.alpha)
    }
}

/// Solves the continuous normal equations (Φ + λL) α† = ⟨f, φ⟩.
pub fn project(inner_products: &[f64], phi: &MatF, l: &MatF, lambda: f64) -> Result<VecF> {
    let system = phi.add(&l.scale(lambda));
    Ok(crate::numerics::solve_spd(&system, inner_products)?)
}

/// Repeated discrete projections for one sample layout share the assembled
/// system and its Cholesky factor; only the right-hand side changes.
#[derive(Debug, Clone)]
pub struct DiscreteProjector {
    factor: CholeskyFactor<f64>,
    rhs_op: RhsOp,
}

#[derive(Debug, Clone)]
enum RhsOp {
    /// Φ̃ D_w formed explicitly (N_b × n).
    Direct { phi_w: MatF },
    /// Per-axis Φ̃_d D_d for tensor grids; the right-hand side is a
    /// contraction over axes, never forming the full Φ̃.
    Tensor { axis_ops: Vec<MatF> },
}

impl DiscreteProjector {
    /// Generic point sets: forms Φ̃ densely.
    pub fn from_points(
        b: &BasisSet,
        l: &MatF,
        lambda: f64,
        points: &[f64],
        weights: &[f64],
    ) -> Result<Self> {
        let phi_tilde = eval_basis(b, points);
        let n_b = phi_tilde.rows();
        let n = phi_tilde.cols();
        assert_eq!(weights.len(), n);
        let mut phi_w = phi_tilde.clone();
        for i in 0..n_b {
            for j in 0..n {
                phi_w[(i, j)] *= weights[j];
            }
        }
        // A = Φ̃ D_w Φ̃ᵀ, then + λL
        let mut a = Matrix::zeros(n_b, n_b);
        for i in 0..n_b {
            for j in i..n_b {
                let v = kahan_sum((0..n).map(|q| phi_w[(i, q)] * phi_tilde[(j, q)]));
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let system = a.add(&l.scale(lambda));
        let factor = cholesky(&system)?;
        Ok(DiscreteProjector {
            factor,
            rhs_op: RhsOp::Direct { phi_w },
        })
    }

    /// Tensor grids: per-axis assembly; A = ⊗_d (Φ̃_d D_d Φ̃_dᵀ).
    pub fn for_grid(b: &BasisSet, l: &MatF, lambda: f64, grid: &TensorGrid) -> Result<Self> {
        assert_eq!(b.dim(), grid.dim());
        let mut axis_ops = Vec::with_capacity(b.dim());
        let mut axis_normal = Vec::with_capacity(b.dim());
        for d in 0..b.dim() {
            let axis = grid.axis(d);
            let n = axis.len();
            let m = b.axis_centers().len();
            let mut w = vec![0.0; n];
            for i in 0..n {
                let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
                let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
                w[i] = 0.5 * (left + right);
            }
            let ev = Matrix::from_fn(m, n, |i, j| {
                gaussian(&[b.axis_centers()[i]], b.sigma(), &[axis[j]])
            });
            let mut ev_w = ev.clone();
            for i in 0..m {
                for j in 0..n {
                    ev_w[(i, j)] *= w[j];
                }
            }
            axis_normal.push(ev_w.matmul(&ev.transpose()).symmetrized());
            axis_ops.push(ev_w);
        }
        let a = match b.dim() {
            1 => axis_normal.pop().unwrap(),
            2 => {
                let m = b.axis_centers().len();
                let (a1, a2) = (&axis_normal[0], &axis_normal[1]);
                Matrix::from_fn(m * m, m * m, |i, j| {
                    a1[(i / m, j / m)] * a2[(i % m, j % m)]
                })
            }
            _ => unreachable!(),
        };
        let system = a.add(&l.scale(lambda));
        let factor = cholesky(&system)?;
        Ok(DiscreteProjector {
            factor,
            rhs_op: RhsOp::Tensor { axis_ops },
        })
    }

    /// Applies (Φ̃D_wΦ̃ᵀ + λL)⁻¹ to an arbitrary right-hand side.
    pub fn solve_system(&self, rhs: &[f64]) -> VecF {
        self.factor.solve(rhs)
    }

    /// Solves for the coefficients of one sample-value vector.
    pub fn project(&self, values: &[f64]) -> VecF {
        let rhs = match &self.rhs_op {
            RhsOp::Direct { phi_w } => phi_w.matvec(values),
            RhsOp::Tensor { axis_ops } => match axis_ops.len() {
                1 => axis_ops[0].matvec(values),
                2 => {
                    // R = B₁ F B₂ᵀ with F the values reshaped (n₁ × n₂)
                    let (b1, b2) = (&axis_ops[0], &axis_ops[1]);
                    let f = Matrix::from_vec(b1.cols(), b2.cols(), values.to_vec());
                    b1.matmul(&f).matmul(&b2.transpose()).data().to_vec()
                }
                _ => unreachable!(),
            },
        };
        self.factor.solve(&rhs)
    }
}

/// Solves the discrete normal equations for one sample set.
pub fn project_discrete(samples: &SampleSet, b: &BasisSet, l: &MatF, lambda: f64) -> Result<VecF> {
    if samples.is_empty() {
        return Err(ProjectionError::BadSamples("empty sample set".into()));
    }
    let proj = DiscreteProjector::from_points(b, l, lambda, &samples.points, &samples.weights)?;
    Ok(proj.project(&samples.values))
}

/// Frame projection coefficients α = Φ† ⟨u, φ⟩ (minimum-norm solution).
pub fn frame_project(inner_products: &[f64], phi: &MatF) -> VecF {
    pinv(phi).matvec(inner_products)
}

/// How the reference inner products ⟨f, φ⟩ and Gram Φ are obtained.
pub enum InnerProductOracle<'a> {
    /// Integrate the true function against each basis element with a
    /// composite Gauss rule (`quad_order` nodes per cell, `cells_per_axis`
    /// cells per axis). Yields a certified reference.
    Function {
        f: &'a dyn Fn(&[f64]) -> f64,
        quad_order: usize,
        cells_per_axis: usize,
    },
    /// The function is only known through samples; the finest available
    /// sampling stands in for the integrals and the bound is an estimate.
    FinestSamples(&'a SampleSet),
}

/// The evaluated coefficient error bound together with its ingredients and
/// whether the reference inner products were certified or estimated.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoeffBound {
    pub value: f64,
    /// ‖⟨f,φ⟩ − Φ̃ D_w f‖₂
    pub rhs_gap: f64,
    /// ‖Φ̃ D_w Φ̃ᵀ − Φ‖₂
    pub gram_gap: f64,
    /// ‖L⁻¹‖₂
    pub inv_l_norm: f64,
    /// ‖(Φ + λL)⁻¹‖₂
    pub inv_system_norm: f64,
    /// ‖⟨f,φ⟩‖₂
    pub inner_product_norm: f64,
    pub lambda: f64,
    /// True when the oracle integrated the actual function; false when the
    /// finest sampling stood in for it.
    pub certified: bool,
    pub oracle: String,
}

/// Inner products ⟨f, φᵢ⟩ over Ω by composite Gauss quadrature.
pub fn inner_products_quadrature(
    b: &BasisSet,
    f: &dyn Fn(&[f64]) -> f64,
    quad_order: usize,
    cells_per_axis: usize,
) -> VecF {
    let (gx, gw) = gauss_legendre::<f64>(quad_order.max(1));
    let h = 1.0 / cells_per_axis as f64;
    let mut xs = Vec::with_capacity(cells_per_axis * gx.len());
    let mut ws = Vec::with_capacity(cells_per_axis * gx.len());
    for c in 0..cells_per_axis {
        let lo = c as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    match b.dim() {
        1 => {
            let ev = eval_basis(b, &xs);
            (0..b.n_basis())
                .map(|i| kahan_sum((0..xs.len()).map(|q| ws[q] * ev[(i, q)] * f(&[xs[q]]))))
                .collect()
        }
        2 => {
            let mut pts = Vec::with_capacity(xs.len() * xs.len() * 2);
            let mut wts = Vec::with_capacity(xs.len() * xs.len());
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in xs.iter().enumerate() {
                    pts.push(x);
                    pts.push(y);
                    wts.push(ws[i] * ws[j]);
                }
            }
            let ev = eval_basis(b, &pts);
            (0..b.n_basis())
                .map(|i| {
                    kahan_sum(
                        (0..wts.len()).map(|q| wts[q] * ev[(i, q)] * f(&pts[2 * q..2 * q + 2])),
                    )
                })
                .collect()
        }
        _ => unreachable!(),
    }
}

/// Evaluates the coefficient error bound
/// (‖L⁻¹‖₂/λ)·(‖⟨f,φ⟩ − Φ̃D_w f‖₂ + ‖Φ̃D_wΦ̃ᵀ − Φ‖₂·‖(Φ+λL)⁻¹‖₂·‖⟨f,φ⟩‖₂)
/// with the reference quantities taken from the oracle.
pub fn coeff_error_bound(
    samples: &SampleSet,
    b: &BasisSet,
    l: &MatF,
    lambda: f64,
    oracle: &InnerProductOracle,
) -> Result<CoeffBound> {
    if lambda <= 0.0 {
        return Err(ProjectionError::LambdaNotPositive(lambda));
    }
    let l_eigs = sym_eig(l);
    let min_eig = l_eigs.values[0];
    if min_eig <= 0.0 {
        return Err(ProjectionError::SingularL { min_eig });
    }
    let inv_l_norm = 1.0 / min_eig;

    let (ip_ref, phi_ref, certified, oracle_desc) = match oracle {
        InnerProductOracle::Function {
            f,
            quad_order,
            cells_per_axis,
        } => {
            let ip = inner_products_quadrature(b, f, *quad_order, *cells_per_axis);
            let phi = gram_l2(b, *quad_order, *cells_per_axis);
            (
                ip,
                phi,
                true,
                format!("gauss quadrature, {quad_order} nodes/cell, {cells_per_axis} cells/axis"),
            )
        }
        InnerProductOracle::FinestSamples(fine) => {
            let ev = eval_basis(b, &fine.points);
            let ip: VecF = (0..b.n_basis())
                .map(|i| {
                    kahan_sum(
                        (0..fine.len()).map(|q| fine.weights[q] * ev[(i, q)] * fine.values[q]),
                    )
                })
                .collect();
            let mut phi = Matrix::zeros(b.n_basis(), b.n_basis());
            for i in 0..b.n_basis() {
                for j in i..b.n_basis() {
                    let v = kahan_sum(
                        (0..fine.len()).map(|q| fine.weights[q] * ev[(i, q)] * ev[(j, q)]),
                    );
                    phi[(i, j)] = v;
                    phi[(j, i)] = v;
                }
            }
            (
                ip,
                phi,
                false,
                format!("finest available sampling, {} points", fine.len()),
            )
        }
    };

    let ev = eval_basis(b, &samples.points);
    let n_b = b.n_basis();
    let disc_ip: VecF = (0..n_b)
        .map(|i| {
            kahan_sum((0..samples.len()).map(|q| samples.weights[q] * ev[(i, q)] * samples.values[q]))
        })
        .collect();
    let mut disc_gram = Matrix::zeros(n_b, n_b);
    for i in 0..n_b {
        for j in i..n_b {
            let v = kahan_sum(
                (0..samples.len()).map(|q| samples.weights[q] * ev[(i, q)] * ev[(j, q)]),
            );
            disc_gram[(i, j)] = v;
            disc_gram[(j, i)] = v;
        }
    }

    let rhs_gap_vec: VecF = ip_ref
        .iter()
        .zip(&disc_ip)
        .map(|(a, b)| a - b)
        .collect();
    let rhs_gap = crate::numerics::norm2(&rhs_gap_vec);
    let gram_gap = spectral_norm(&disc_gram.sub(&phi_ref), 1e-10)?;
    let system = phi_ref.add(&l.scale(lambda));
    let sys_eigs = sym_eig(&system);
    let inv_system_norm = 1.0 / sys_eigs.values[0].max(1e-300);
    let inner_product_norm = crate::numerics::norm2(&ip_ref);
    let value = inv_l_norm / lambda * (rhs_gap + gram_gap * inv_system_norm * inner_product_norm);
    Ok(CoeffBound {
        value,
        rhs_gap,
        gram_gap,
        inv_l_norm,
        inv_system_norm,
        inner_product_norm,
        lambda,
        certified,
        oracle: oracle_desc,
    })
}
