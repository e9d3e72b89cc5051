//! Mesh quadrature: per-cell Gauss–Legendre tensor rules, trapezoid-type
//! grid weights, and an evaluator for the quadrature error bound
//! (domain-approximation term plus a smooth or total-variation term).

use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("total-variation branch is unsupported in dimension {dim}")]
    TvUnsupportedDim { dim: usize },
    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("quadrature order must be at least 1")]
    ZeroOrder,
}

/// Tensor grid over an axis-aligned box, stored per axis.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    axes: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Self {
        assert!(!axes.is_empty() && axes.iter().all(|a| a.len() >= 2));
        for axis in &axes {
            assert!(
                axis.windows(2).all(|w| w[0] < w[1]),
                "axis points must be strictly increasing"
            );
        }
        TensorGrid { axes }
    }

    /// Uniform grid with `n` points per axis on [0,1]^dim.
    pub fn uniform_unit(dim: usize, n: usize) -> Self {
        assert!(n >= 2);
        let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        TensorGrid {
            axes: vec![axis; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All grid points in row-major order (last axis fastest), flattened.
    pub fn points(&self) -> Vec<f64> {
        let dim = self.dim();
        let total = self.len();
        let mut pts = Vec::with_capacity(total * dim);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            for d in 0..dim {
                pts.push(self.axes[d][idx[d]]);
            }
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < self.axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        pts
    }
}

/// Axis-aligned cell of a mesh.
#[derive(Debug, Clone)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cell {
    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Mesh of disjoint axis-aligned cells covering (part of) the domain.
/// `uncovered` is the measure of the symmetric difference with the true
/// domain; uniform grids cover exactly, so it is zero there.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub cells: Vec<Cell>,
    pub uncovered: f64,
}

impl Mesh {
    /// Uniform mesh of `cells_per_axis`^dim cells on [0,1]^dim.
    pub fn uniform_unit(dim: usize, cells_per_axis: usize) -> Self {
        assert!(cells_per_axis >= 1);
        let h = 1.0 / cells_per_axis as f64;
        let total = cells_per_axis.pow(dim as u32);
        let mut cells = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let lo: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
            let hi: Vec<f64> = idx.iter().map(|&i| (i + 1) as f64 * h).collect();
            cells.push(Cell { lo, hi });
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < cells_per_axis {
                    break;
                }
                idx[d] = 0;
            }
        }
        Mesh {
            cells,
            uncovered: 0.0,
        }
    }

    pub fn covered_measure(&self) -> f64 {
        kahan_sum(self.cells.iter().map(Cell::measure))
    }

    /// Largest cell diameter h.
    pub fn mesh_size(&self) -> f64 {
        self.cells.iter().map(Cell::diameter).fold(0.0, f64::max)
    }
}

/// Quadrature rule: flattened nodes, weights, and the polynomial order the
/// per-cell rule is exact for.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub dim: usize,
    pub nodes: Vec<f64>, // len = n_points * dim
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadRule {
    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    /// Approximates ∫ f with compensated (Kahan) summation so the result is
    /// independent of accumulation grouping.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        kahan_sum((0..self.n_points()).map(|i| self.weights[i] * f(self.node(i))))
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre polynomial from the Chebyshev initial guess.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![T::zero()], vec![T::of(2.0)]);
    }
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of_usize(n);
    for i in 0..(n + 1) / 2 {
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = T::of(theta.cos());
        let mut dp = T::one();
        for _ in 0..100 {
            // P_n and P_{n−1} via the three-term recurrence.
            let mut p0 = T::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = T::of_usize(k);
                let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x = x - dx;
            if dx.abs() <= T::of(1e-16) {
                break;
            }
        }
        let w = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        // x starts positive for i < n/2 by the cosine guess; store symmetric pair
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
        if n % 2 == 1 && i == n / 2 {
            nodes[i] = T::zero();
        }
    }
    (nodes, weights)
}

/// Per-cell Gauss–Legendre tensor rule exact for polynomials of per-axis
/// degree ≤ p on every cell.
pub fn tensor_gauss_rule(mesh: &Mesh, p: usize) -> Result<QuadRule, QuadratureError> {
    if p == 0 {
        return Err(QuadratureError::ZeroOrder);
    }
    let n1 = p / 2 + 1; // 2·n1 − 1 ≥ p
    let (gx, gw) = gauss_legendre::<f64>(n1);
    let dim = mesh.cells.first().map_or(1, |c| c.lo.len());
    let pts_per_cell = n1.pow(dim as u32);
    let mut nodes = Vec::with_capacity(mesh.cells.len() * pts_per_cell * dim);
    let mut weights = Vec::with_capacity(mesh.cells.len() * pts_per_cell);
    let mut idx = vec![0usize; dim];
    for cell in &mesh.cells {
        idx.iter_mut().for_each(|i| *i = 0);
        for _ in 0..pts_per_cell {
            let mut w = 1.0;
            for d in 0..dim {
                let half = 0.5 * (cell.hi[d] - cell.lo[d]);
                let mid = 0.5 * (cell.hi[d] + cell.lo[d]);
                nodes.push(mid + half * gx[idx[d]]);
                w *= half * gw[idx[d]];
            }
            weights.push(w);
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < n1 {
                    break;
                }
                idx[d] = 0;
            }
        }
    }
    Ok(QuadRule {
        dim,
        nodes,
        weights,
        order: p,
    })
}

/// Trapezoid-type weights for a tensor grid: per-axis weight Δx, halved on
/// each boundary facet the point touches, tensorized across axes. On a
/// uniform grid interior points get Δx^d, edges 0.5·Δx^d, corners 0.25·Δx^d.
pub fn grid_weights(grid: &TensorGrid) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = grid
        .axes
        .iter()
        .map(|axis| {
            let n = axis.len();
            let mut w = vec![0.0; n];
            for i in 0..n {
                let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
                let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
                w[i] = 0.5 * (left + right);
            }
            w
        })
        .collect();
    let dim = grid.dim();
    let total = grid.len();
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut w = 1.0;
        for d in 0..dim {
            w *= per_axis[d][idx[d]];
        }
        weights.push(w);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < grid.axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    weights
}

/// Regularity information about the integrand for [`quad_error_bound`].
#[derive(Debug, Clone, Copy)]
pub enum SmoothnessData {
    /// sup over the domain of all order-(p+1) partial derivatives.
    Smooth { sup_partial: f64 },
    /// Total variation of the integrand (1D branch only).
    TotalVariation { tv: f64 },
}

/// Evaluates the quadrature error bound
/// |Ω Δ Ω^N|·‖f‖_∞ + { c·h^{p+1}·|Ω^N|·sup|∂^γ f|  or  h·TV(f) }.
///
/// The smooth-branch constant uses c = 1/(p+1)! per axis, summed over axes.
/// This is a conservative certificate, not a tight constant; the underlying
/// estimate fixes only that c depends on p.
pub fn quad_error_bound(
    data: &SmoothnessData,
    mesh: &Mesh,
    p: usize,
    sup_f: f64,
) -> Result<f64, QuadratureError> {
    if sup_f < 0.0 {
        return Err(QuadratureError::Negative {
            what: "sup_f",
            value: sup_f,
        });
    }
    let dim = mesh.cells.first().map_or(1, |c| c.lo.len());
    let h = mesh.mesh_size();
    let domain_term = mesh.uncovered * sup_f;
    let interior = match *data {
        SmoothnessData::Smooth { sup_partial } => {
            if sup_partial < 0.0 {
                return Err(QuadratureError::Negative {
                    what: "sup_partial",
                    value: sup_partial,
                });
            }
            let mut factorial = 1.0;
            for k in 2..=(p + 1) {
                factorial *= k as f64;
            }
            let c = dim as f64 / factorial;
            c * h.powi(p as i32 + 1) * mesh.covered_measure() * sup_partial
        }
        SmoothnessData::TotalVariation { tv } => {
            if dim != 1 {
                return Err(QuadratureError::TvUnsupportedDim { dim });
            }
            if tv < 0.0 {
                return Err(QuadratureError::Negative {
                    what: "tv",
                    value: tv,
                });
            }
            h * tv
        }
    };
    Ok(domain_term + interior)
}

/// Exact total variation of a piecewise-linear interpolant of grid values.
pub fn tv_piecewise_linear(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Compensated summation; deterministic regardless of value magnitudes.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Least-squares slope of log(err) against log(h); the empirical order.
pub fn loglog_slope(hs: &[f64], errs: &[f64]) -> f64 {
    assert_eq!(hs.len(), errs.len());
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
