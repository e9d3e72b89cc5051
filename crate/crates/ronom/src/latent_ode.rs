//! Latent dynamics: explicit ODE solvers over a fixed time grid plus
//! two-point Hermite reconstruction between the solver nodes, giving a
//! time-continuous flow map. Includes the closed-form recursion for higher
//! time derivatives of the solution (needed for Hermite degrees above
//! cubic) and an empirical-order measurement used by the convergence
//! tests: the combined error decays like δ_t^min(2p, q).

use crate::numerics::{lu_solve, Matrix};
use crate::{MatF, VecF};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("time {t} outside trajectory range [{t0}, {t1}]; no extrapolation")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
    #[error("derivative stack depth {have} insufficient, need {need}")]
    InsufficientDepth { need: usize, have: usize },
    #[error("times must be strictly increasing and start at 0")]
    BadTimes,
    #[error("error floor reached ({err:e} at δt = {dt}); use coarser grids")]
    ZeroErrorFloor { err: f64, dt: f64 },
    #[error("need at least {need} refinements, got {got}")]
    TooFewRefinements { need: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, OdeError>;

/// Right-hand side of the latent ODE dz/dt = v(z, t).
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[f64], t: f64, out: &mut [f64]);
}

/// Vector field with an explicit derivative stack: arbitrary mixed partials
/// ∂_z^γ ∂_t^b of each component, up to a stated total depth. Analytic test
/// fields implement this; learned fields do not (they only expose `eval`).
pub trait SmoothVectorField: VectorField {
    /// Mixed partial of component `i`: z_orders is a per-coordinate
    /// multi-index, `t_order` the time-derivative order.
    fn partial(&self, i: usize, z_orders: &[usize], t_order: usize, z: &[f64], t: f64) -> f64;
    /// Largest total derivative order the stack supports.
    fn depth(&self) -> usize;
}

/// Vector field given by a closure over mixed partials.
pub struct AnalyticField<F>
where
    F: Fn(usize, &[usize], usize, &[f64], f64) -> f64,
{
    dim: usize,
    depth: usize,
    partial_fn: F,
}

impl<F> AnalyticField<F>
where
    F: Fn(usize, &[usize], usize, &[f64], f64) -> f64,
{
    pub fn new(dim: usize, depth: usize, partial_fn: F) -> Self {
        AnalyticField {
            dim,
            depth,
            partial_fn,
        }
    }
}

/// Scalar (1-state) analytic field from a closure over (∂_z order, ∂_t order).
pub fn scalar_field(
    depth: usize,
    f: impl Fn(usize, usize, f64, f64) -> f64,
) -> AnalyticField<impl Fn(usize, &[usize], usize, &[f64], f64) -> f64> {
    AnalyticField::new(1, depth, move |_, zo: &[usize], to, z: &[f64], t| {
        f(zo[0], to, z[0], t)
    })
}

impl<F> VectorField for AnalyticField<F>
where
    F: Fn(usize, &[usize], usize, &[f64], f64) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &[f64], t: f64, out: &mut [f64]) {
        let zeros = vec![0usize; self.dim];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.partial_fn)(i, &zeros, 0, z, t);
        }
    }
}

impl<F> SmoothVectorField for AnalyticField<F>
where
    F: Fn(usize, &[usize], usize, &[f64], f64) -> f64,
{
    fn partial(&self, i: usize, z_orders: &[usize], t_order: usize, z: &[f64], t: f64) -> f64 {
        (self.partial_fn)(i, z_orders, t_order, z, t)
    }
    fn depth(&self) -> usize {
        self.depth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Scheme {
    /// Explicit Euler, global order 1.
    Euler,
    /// Classical Runge–Kutta, global order 4.
    Rk4,
}

impl Scheme {
    pub fn order(self) -> usize {
        match self {
            Scheme::Euler => 1,
            Scheme::Rk4 => 4,
        }
    }
}

/// Solver output: states and stored time derivatives at the solver nodes.
/// `derivs[k][node]` is the (k+1)-th time derivative of z at the node;
/// index 0 (the vector-field values) is always present, higher entries only
/// when requested from a field with a derivative stack.
#[derive(Debug, Clone)]
pub struct LatentTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<VecF>,
    pub derivs: Vec<Vec<VecF>>,
}

impl LatentTrajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn interval_of(&self, t: f64) -> Result<usize> {
        let t0 = *self.times.first().unwrap();
        let t1 = *self.times.last().unwrap();
        if t < t0 || t > t1 {
            return Err(OdeError::OutOfRange { t, t0, t1 });
        }
        // last interval containing t
        let idx = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i - 1,
        };
        Ok(idx.min(self.times.len() - 2))
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OdeError::BadTimes);
    }
    Ok(())
}

/// Integrates dz/dt = v(z,t) across the given nodes (one scheme step per
/// interval) and stores the vector-field values at every node.
pub fn solve(vf: &dyn VectorField, z0: &[f64], times: &[f64], scheme: Scheme) -> Result<LatentTrajectory> {
    check_times(times)?;
    let d = z0.len();
    let mut states = Vec::with_capacity(times.len());
    let mut first = Vec::with_capacity(times.len());
    let mut z = z0.to_vec();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for (step, pair) in times.windows(2).enumerate() {
        let (t, t_next) = (pair[0], pair[1]);
        let h = t_next - t;
        vf.eval(&z, t, &mut k1);
        states.push(z.clone());
        first.push(k1.clone());
        match scheme {
            Scheme::Euler => {
                for i in 0..d {
                    z[i] += h * k1[i];
                }
            }
            Scheme::Rk4 => {
                for i in 0..d {
                    tmp[i] = z[i] + 0.5 * h * k1[i];
                }
                vf.eval(&tmp, t + 0.5 * h, &mut k2);
                for i in 0..d {
                    tmp[i] = z[i] + 0.5 * h * k2[i];
                }
                vf.eval(&tmp, t + 0.5 * h, &mut k3);
                for i in 0..d {
                    tmp[i] = z[i] + h * k3[i];
                }
                vf.eval(&tmp, t_next, &mut k4);
                for i in 0..d {
                    z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(OdeError::NonFinite {
                step: step + 1,
                t: t_next,
            });
        }
    }
    let t_last = *times.last().unwrap();
    vf.eval(&z, t_last, &mut k1);
    states.push(z);
    first.push(k1.clone());
    Ok(LatentTrajectory {
        times: times.to_vec(),
        states,
        derivs: vec![first],
    })
}

/// As [`solve`], additionally storing the derivative values R_1..R_{p−2}
/// needed by a degree-(2p−1) Hermite reconstruction.
pub fn solve_with_derivatives(
    vf: &dyn SmoothVectorField,
    z0: &[f64],
    times: &[f64],
    scheme: Scheme,
    p: usize,
) -> Result<LatentTrajectory> {
    let mut traj = solve(vf, z0, times, scheme)?;
    for k in 1..p.saturating_sub(1) {
        let vals: Result<Vec<VecF>> = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, z)| r_k(vf, z, t, k))
            .collect();
        traj.derivs.push(vals?);
    }
    Ok(traj)
}

/// Mixed partial ∂_z^γ ∂_t^b of (R_m)_i, where R_0 = v and R_m is the
/// m-th total time derivative of v along the flow:
/// R_m = Σ_j (∂_{z_j} R_{m−1}) (R_0)_j + ∂_t R_{m−1}.
/// The partials expand by the multivariate Leibniz rule over that product.
fn rk_partial(
    vf: &dyn SmoothVectorField,
    m: usize,
    i: usize,
    gamma: &[usize],
    b: usize,
    z: &[f64],
    t: f64,
) -> f64 {
    if m == 0 {
        return vf.partial(i, gamma, b, z, t);
    }
    let d = vf.dim();
    let mut acc = 0.0;
    // iterate sub-multi-indices γ' ≤ γ and b' ≤ b
    let mut sub = vec![0usize; d];
    loop {
        for bp in 0..=b {
            let mut coeff = binomial(b, bp) as f64;
            for (g, gp) in gamma.iter().zip(&sub) {
                coeff *= binomial(*g, *gp) as f64;
            }
            for j in 0..d {
                let mut left_idx = sub.clone();
                left_idx[j] += 1;
                let left = rk_partial(vf, m - 1, i, &left_idx, bp, z, t);
                let rest: Vec<usize> = gamma.iter().zip(&sub).map(|(g, gp)| g - gp).collect();
                let right = rk_partial(vf, 0, j, &rest, b - bp, z, t);
                acc += coeff * left * right;
            }
        }
        // advance sub ≤ gamma in mixed radix
        let mut carry = true;
        for dd in (0..d).rev() {
            if !carry {
                break;
            }
            sub[dd] += 1;
            if sub[dd] <= gamma[dd] {
                carry = false;
            } else {
                sub[dd] = 0;
            }
        }
        if carry {
            break;
        }
    }
    acc + rk_partial(vf, m - 1, i, gamma, b + 1, z, t)
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num *= (n - i) as u64;
        den *= (i + 1) as u64;
    }
    num / den
}

/// R_k at (z, t): the (k+1)-th time derivative of the ODE solution through
/// (z, t), expressed from the vector field and its partials.
pub fn r_k(vf: &dyn SmoothVectorField, z: &[f64], t: f64, k: usize) -> Result<VecF> {
    if vf.depth() < k {
        return Err(OdeError::InsufficientDepth {
            need: k,
            have: vf.depth(),
        });
    }
    let zeros = vec![0usize; vf.dim()];
    Ok((0..vf.dim())
        .map(|i| rk_partial(vf, k, i, &zeros, 0, z, t))
        .collect())
}

/// Cubic two-point Hermite reconstruction from node values and stored first
/// derivatives; exact at the nodes, C¹ across interior nodes.
pub fn hermite_eval(traj: &LatentTrajectory, t: f64) -> Result<VecF> {
    let i = traj.interval_of(t)?;
    if t == traj.times[i] {
        return Ok(traj.states[i].clone());
    }
    if t == traj.times[i + 1] {
        return Ok(traj.states[i + 1].clone());
    }
    let delta = traj.times[i + 1] - traj.times[i];
    let x = (t - traj.times[i]) / delta;
    let h00 = 2.0 * x * x * x - 3.0 * x * x + 1.0;
    let h10 = x * x * x - 2.0 * x * x + x;
    let h01 = -2.0 * x * x * x + 3.0 * x * x;
    let h11 = x * x * x - x * x;
    let d = traj.dim();
    let mut out = vec![0.0; d];
    let v = &traj.derivs[0];
    for c in 0..d {
        out[c] = h00 * traj.states[i][c]
            + h01 * traj.states[i + 1][c]
            + delta * (h10 * v[i][c] + h11 * v[i + 1][c]);
    }
    Ok(out)
}

/// Interpolation matrix A_{2p−1} on [0,1]: maps the endpoint data layout
/// [f(0), f(1), δf′(0), δf′(1), …, δ^{p−1}f^{(p−1)}(0), δ^{p−1}f^{(p−1)}(1)]
/// to monomial coefficients. Solved once per p and cached.
fn hermite_matrix(p: usize) -> Arc<MatF> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<MatF>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(p)
        .or_insert_with(|| {
            let n = 2 * p;
            // B row 2k: d^k/dx^k x^m at 0; row 2k+1: at 1.
            let mut bmat = Matrix::<f64>::zeros(n, n);
            for k in 0..p {
                for m in 0..n {
                    let fall = |m: usize, k: usize| -> f64 {
                        (0..k).map(|j| (m - j) as f64).product()
                    };
                    if m >= k {
                        bmat[(2 * k + 1, m)] = fall(m, k);
                        if m == k {
                            bmat[(2 * k, m)] = fall(m, k);
                        }
                    }
                }
            }
            // invert by solving for each unit column
            let mut a = Matrix::<f64>::zeros(n, n);
            for col in 0..n {
                let mut e = vec![0.0; n];
                e[col] = 1.0;
                let x = lu_solve(&bmat, &e).expect("Hermite system nonsingular");
                for row in 0..n {
                    a[(row, col)] = x[row];
                }
            }
            Arc::new(a)
        })
        .clone()
}

/// Degree-(2p−1) two-point Hermite reconstruction matching values and
/// derivatives up to order p−1 at the interval endpoints. p = 1 is linear
/// interpolation; p = 2 coincides with [`hermite_eval`].
pub fn hermite_general(traj: &LatentTrajectory, t: f64, p: usize) -> Result<VecF> {
    assert!(p >= 1);
    if p >= 2 && traj.derivs.len() < p - 1 {
        return Err(OdeError::InsufficientDepth {
            need: p - 1,
            have: traj.derivs.len(),
        });
    }
    let i = traj.interval_of(t)?;
    if t == traj.times[i] {
        return Ok(traj.states[i].clone());
    }
    if t == traj.times[i + 1] {
        return Ok(traj.states[i + 1].clone());
    }
    let delta = traj.times[i + 1] - traj.times[i];
    let x = (t - traj.times[i]) / delta;
    let d = traj.dim();
    if p == 1 {
        let mut out = vec![0.0; d];
        for c in 0..d {
            out[c] = (1.0 - x) * traj.states[i][c] + x * traj.states[i + 1][c];
        }
        return Ok(out);
    }
    let a = hermite_matrix(p);
    let n = 2 * p;
    // monomial weights wᵀA evaluated once per query
    let mut pow = vec![1.0; n];
    for m in 1..n {
        pow[m] = pow[m - 1] * x;
    }
    let wa: Vec<f64> = (0..n)
        .map(|col| (0..n).map(|row| pow[row] * a[(row, col)]).sum())
        .collect();
    let mut out = vec![0.0; d];
    let mut scale = vec![1.0; p];
    for k in 1..p {
        scale[k] = scale[k - 1] * delta;
    }
    for c in 0..d {
        let mut acc = wa[0] * traj.states[i][c] + wa[1] * traj.states[i + 1][c];
        for k in 1..p {
            let dk = &traj.derivs[k - 1];
            acc += scale[k] * (wa[2 * k] * dk[i][c] + wa[2 * k + 1] * dk[i + 1][c]);
        }
        out[c] = acc;
    }
    Ok(out)
}

/// Measures the empirical convergence order of solver + reconstruction:
/// log–log least-squares slope of the sup-over-t error against δ_t.
/// `reference` must be the analytic solution; `dts` needs ≥ 4 entries.
pub fn empirical_order(
    vf: &dyn SmoothVectorField,
    reference: &dyn Fn(f64) -> VecF,
    z0: &[f64],
    t_end: f64,
    scheme: Scheme,
    p: usize,
    dts: &[f64],
) -> Result<f64> {
    if dts.len() < 4 {
        return Err(OdeError::TooFewRefinements {
            need: 4,
            got: dts.len(),
        });
    }
    let n_probe = 401;
    let mut errs = Vec::with_capacity(dts.len());
    for &dt in dts {
        let n_steps = (t_end / dt).round() as usize;
        let times: Vec<f64> = (0..=n_steps).map(|i| i as f64 * t_end / n_steps as f64).collect();
        let traj = solve_with_derivatives(vf, z0, &times, scheme, p)?;
        let mut sup = 0.0f64;
        for q in 0..=n_probe {
            let t = t_end * q as f64 / n_probe as f64;
            let approx = hermite_general(&traj, t, p)?;
            let exact = reference(t);
            let err = approx
                .iter()
                .zip(&exact)
                .map(|(a, e)| (a - e) * (a - e))
                .sum::<f64>()
                .sqrt();
            sup = sup.max(err);
        }
        if sup < 1e-14 {
            return Err(OdeError::ZeroErrorFloor { err: sup, dt });
        }
        errs.push(sup);
    }
    Ok(crate::quadrature::loglog_slope(dts, &errs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_field() -> AnalyticField<impl Fn(usize, &[usize], usize, &[f64], f64) -> f64> {
        // v(z) = −z
        scalar_field(6, |zo, to, z, _t| match (zo, to) {
            (0, 0) => -z,
            (1, 0) => -1.0,
            _ => 0.0,
        })
    }

    #[test]
    fn zero_field_constant_trajectory() {
        let vf = scalar_field(2, |zo, to, _z, _t| if (zo, to) == (0, 0) { 0.0 } else { 0.0 });
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let traj = solve(&vf, &[1.5], &times, Scheme::Rk4).unwrap();
        for s in &traj.states {
            assert_eq!(s[0], 1.5);
        }
    }

    #[test]
    fn rk4_matches_exponential() {
        let vf = decay_field();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let traj = solve(&vf, &[1.0], &times, Scheme::Rk4).unwrap();
        let z1 = traj.states.last().unwrap()[0];
        assert!((z1 - (-1.0f64).exp()).abs() < 1e-6, "got {z1}");
    }

    #[test]
    fn euler_error_is_closed_form() {
        let vf = decay_field();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let traj = solve(&vf, &[1.0], &times, Scheme::Euler).unwrap();
        let z1 = traj.states.last().unwrap()[0];
        // Euler iterate is (1 − h)^n = 0.9¹⁰
        let expect = 0.9f64.powi(10);
        assert!((z1 - expect).abs() < 1e-14);
        assert!(((z1 - (-1.0f64).exp()).abs() - 0.0191).abs() < 5e-4);
    }

    #[test]
    fn nonfinite_state_reports_step() {
        // v(z) = z² from z₀ = 1 blows up past t = 1
        let vf = scalar_field(2, |zo, to, z, _| match (zo, to) {
            (0, 0) => z * z,
            (1, 0) => 2.0 * z,
            _ => 0.0,
        });
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        match solve(&vf, &[1.0], &times, Scheme::Euler) {
            Err(OdeError::NonFinite { step, .. }) => assert!(step > 0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn hermite_exact_at_nodes_and_on_cubics() {
        // trajectory sampled from z(t) = t³ with exact derivatives 3t²
        let times: Vec<f64> = (0..=5).map(|i| i as f64 * 0.2).collect();
        let states: Vec<VecF> = times.iter().map(|&t| vec![t * t * t]).collect();
        let derivs: Vec<VecF> = times.iter().map(|&t| vec![3.0 * t * t]).collect();
        let traj = LatentTrajectory {
            times: times.clone(),
            states,
            derivs: vec![derivs],
        };
        for &t in &times {
            let v = hermite_eval(&traj, t).unwrap();
            assert_eq!(v[0], t * t * t);
        }
        for t in [0.13, 0.5501, 0.97] {
            let v = hermite_eval(&traj, t).unwrap();
            assert!((v[0] - t * t * t).abs() < 1e-14, "cubic reproduction at {t}");
        }
    }

    #[test]
    fn hermite_error_order_on_decay() {
        let vf = decay_field();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let traj = solve(&vf, &[1.0], &times, Scheme::Rk4).unwrap();
        let t = 0.55;
        let v = hermite_eval(&traj, t).unwrap();
        let err = (v[0] - (-t).exp()).abs();
        assert!(err <= 1.0 * 0.1f64.powi(4), "err {err}");
    }

    #[test]
    fn hermite_rejects_extrapolation() {
        let vf = decay_field();
        let times: Vec<f64> = (0..=4).map(|i| i as f64 * 0.25).collect();
        let traj = solve(&vf, &[1.0], &times, Scheme::Rk4).unwrap();
        assert!(matches!(
            hermite_eval(&traj, 1.5),
            Err(OdeError::OutOfRange { .. })
        ));
        assert!(matches!(
            hermite_eval(&traj, -0.1),
            Err(OdeError::OutOfRange { .. })
        ));
    }

    #[test]
    fn c1_across_interior_nodes() {
        let vf = scalar_field(2, |zo, to, z, _| match (zo, to) {
            (0, 0) => z - z * z * z,
            (1, 0) => 1.0 - 3.0 * z * z,
            _ => 0.0,
        });
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.125).collect();
        let traj = solve(&vf, &[0.5], &times, Scheme::Rk4).unwrap();
        let eps = 1e-7;
        for i in 1..traj.times.len() - 1 {
            let tn = traj.times[i];
            let left = (hermite_eval(&traj, tn).unwrap()[0] - hermite_eval(&traj, tn - eps).unwrap()[0]) / eps;
            let right = (hermite_eval(&traj, tn + eps).unwrap()[0] - hermite_eval(&traj, tn).unwrap()[0]) / eps;
            assert!(
                (left - right).abs() < 1e-5,
                "derivative jump {} at node {}",
                (left - right).abs(),
                tn
            );
        }
    }

    #[test]
    fn rk_linear_field_all_orders() {
        // v(z) = z: every derivative of e^t·z₀ is the state itself
        let vf = scalar_field(8, |zo, to, z, _| match (zo, to) {
            (0, 0) => z,
            (1, 0) => 1.0,
            _ => 0.0,
        });
        for k in 0..5 {
            let r = r_k(&vf, &[0.7], 0.0, k).unwrap();
            assert!((r[0] - 0.7).abs() < 1e-14, "R_{k} = {}", r[0]);
        }
    }

    #[test]
    fn rk_time_only_field() {
        // v(z,t) = t ⇒ z″ = 1, z‴ = 0
        let vf = scalar_field(8, |zo, to, _z, t| match (zo, to) {
            (0, 0) => t,
            (0, 1) => 1.0,
            _ => 0.0,
        });
        let r1 = r_k(&vf, &[0.3], 0.4, 1).unwrap();
        let r2 = r_k(&vf, &[0.3], 0.4, 2).unwrap();
        assert_eq!(r1[0], 1.0);
        assert_eq!(r2[0], 0.0);
    }

    #[test]
    fn rk_quadratic_field_hand_derivative() {
        // v(z) = z² ⇒ z″ = 2zż = 2z³
        let vf = scalar_field(8, |zo, to, z, _| match (zo, to) {
            (0, 0) => z * z,
            (1, 0) => 2.0 * z,
            (2, 0) => 2.0,
            _ => 0.0,
        });
        let z = 1.3;
        let r1 = r_k(&vf, &[z], 0.0, 1).unwrap();
        assert!((r1[0] - 2.0 * z * z * z).abs() < 1e-12);
        // z‴ = d/dt(2z³) = 6z²ż = 6z⁴
        let r2 = r_k(&vf, &[z], 0.0, 2).unwrap();
        assert!((r2[0] - 6.0 * z.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn rk_depth_check() {
        let vf = scalar_field(1, |zo, to, z, _| if (zo, to) == (0, 0) { z } else { 1.0 });
        assert!(matches!(
            r_k(&vf, &[1.0], 0.0, 3),
            Err(OdeError::InsufficientDepth { need: 3, have: 1 })
        ));
    }

    #[test]
    fn rk_multidim_matches_finite_differences() {
        // v(z, t) = (z₁z₂ + sin t, z₁² − t z₂)
        let vf = AnalyticField::new(2, 6, |i, zo: &[usize], to, z: &[f64], t: f64| {
            let (a, b) = (z[0], z[1]);
            match (i, zo[0], zo[1], to) {
                (0, 0, 0, 0) => a * b + t.sin(),
                (0, 1, 0, 0) => b,
                (0, 0, 1, 0) => a,
                (0, 1, 1, 0) => 1.0,
                (0, 0, 0, 1) => t.cos(),
                (0, 0, 0, 2) => -t.sin(),
                (0, 0, 0, 3) => -t.cos(),
                (1, 0, 0, 0) => a * a - t * b,
                (1, 1, 0, 0) => 2.0 * a,
                (1, 2, 0, 0) => 2.0,
                (1, 0, 1, 0) => -t,
                (1, 0, 0, 1) => -b,
                (1, 0, 1, 1) => -1.0,
                _ => 0.0,
            }
        });
        // reference: 4th-order finite difference of the solved z(t) around t₀
        let z0 = [0.4, -0.3];
        let t0 = 0.2;
        let h = 1e-3;
        let fine: Vec<f64> = (0..=4000).map(|i| i as f64 * 1e-4).collect();
        let traj = solve(&vf, &z0, &fine, Scheme::Rk4).unwrap();
        let zat = |t: f64| hermite_eval(&traj, t).unwrap();
        for k in 1..=2 {
            let z_t0 = zat(t0);
            let r = r_k(&vf, &z_t0, t0, k).unwrap();
            for c in 0..2 {
                let fd = match k {
                    1 => {
                        // second derivative stencil
                        (zat(t0 + h)[c] - 2.0 * z_t0[c] + zat(t0 - h)[c]) / (h * h)
                    }
                    2 => {
                        (zat(t0 + 2.0 * h)[c] - 2.0 * zat(t0 + h)[c] + 2.0 * zat(t0 - h)[c]
                            - zat(t0 - 2.0 * h)[c])
                            / (2.0 * h * h * h)
                    }
                    _ => unreachable!(),
                };
                assert!(
                    (r[c] - fd).abs() < 1e-3 * (1.0 + fd.abs()),
                    "k={k} comp {c}: recursion {} vs fd {}",
                    r[c],
                    fd
                );
            }
        }
    }

    #[test]
    fn hermite_general_linear_case() {
        let traj = LatentTrajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![0.0], vec![1.0]],
            derivs: vec![vec![vec![0.0], vec![0.0]]],
        };
        let mid = hermite_general(&traj, 0.5, 1).unwrap();
        assert!((mid[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hermite_general_p2_matches_cubic() {
        let vf = decay_field();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let traj = solve(&vf, &[1.0], &times, Scheme::Rk4).unwrap();
        for t in [0.05, 0.333, 0.78, 0.999] {
            let a = hermite_eval(&traj, t).unwrap();
            let b = hermite_general(&traj, t, 2).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn hermite_general_p3_reproduces_quintics() {
        // z(t) = t⁵ with exact derivatives up to order 2
        let times: Vec<f64> = (0..=4).map(|i| i as f64 * 0.25).collect();
        let states: Vec<VecF> = times.iter().map(|&t| vec![t.powi(5)]).collect();
        let d1: Vec<VecF> = times.iter().map(|&t| vec![5.0 * t.powi(4)]).collect();
        let d2: Vec<VecF> = times.iter().map(|&t| vec![20.0 * t.powi(3)]).collect();
        let traj = LatentTrajectory {
            times,
            states,
            derivs: vec![d1, d2],
        };
        for t in [0.1, 0.42, 0.87] {
            let v = hermite_general(&traj, t, 3).unwrap();
            assert!((v[0] - t.powi(5)).abs() < 1e-12, "quintic at {t}: {}", v[0]);
        }
    }

    fn cubic_decay_field() -> AnalyticField<impl Fn(usize, &[usize], usize, &[f64], f64) -> f64> {
        // v(z) = z − z³
        scalar_field(8, |zo, to, z, _| match (zo, to) {
            (0, 0) => z - z * z * z,
            (1, 0) => 1.0 - 3.0 * z * z,
            (2, 0) => -6.0 * z,
            (3, 0) => -6.0,
            _ => 0.0,
        })
    }

    fn cubic_decay_reference(z0: f64) -> impl Fn(f64) -> VecF {
        // z(t) = z₀ e^t / √(1 + z₀²(e^{2t} − 1))
        move |t: f64| {
            let e2 = (2.0 * t).exp();
            vec![z0 * t.exp() / (1.0 + z0 * z0 * (e2 - 1.0)).sqrt()]
        }
    }

    #[test]
    fn order_law_across_schemes_and_degrees() {
        let vf = cubic_decay_field();
        let z0 = 0.5;
        let reference = cubic_decay_reference(z0);
        let dts = [0.2, 0.1, 0.05, 0.025, 0.0125];
        for (scheme, p, expect) in [
            (Scheme::Euler, 2usize, 1.0f64),
            (Scheme::Rk4, 1, 2.0),
            (Scheme::Rk4, 2, 4.0),
            (Scheme::Rk4, 3, 4.0),
        ] {
            let slope =
                empirical_order(&vf, &reference, &[z0], 1.0, scheme, p, &dts).unwrap();
            assert!(
                (slope - expect).abs() <= 0.3,
                "scheme {scheme:?} p={p}: slope {slope} vs {expect}"
            );
        }
    }

    #[test]
    fn rk4_halving_reduces_error_sixteenfold_ish() {
        let vf = cubic_decay_field();
        let reference = cubic_decay_reference(0.5);
        let mut errs = Vec::new();
        for n in [10usize, 20] {
            let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let traj = solve(&vf, &[0.5], &times, Scheme::Rk4).unwrap();
            let e = (traj.states.last().unwrap()[0] - reference(1.0)[0]).abs();
            errs.push(e);
        }
        assert!(errs[0] / errs[1] >= 12.0, "ratio {}", errs[0] / errs[1]);
    }

    #[test]
    fn empirical_order_guards() {
        let vf = cubic_decay_field();
        let reference = cubic_decay_reference(0.5);
        assert!(matches!(
            empirical_order(&vf, &reference, &[0.5], 1.0, Scheme::Rk4, 2, &[0.1, 0.05]),
            Err(OdeError::TooFewRefinements { .. })
        ));
        // zero-field trajectories have zero error: floor detected
        let zero = scalar_field(8, |_, _, _, _| 0.0);
        let zref = |_: f64| vec![0.5];
        assert!(matches!(
            empirical_order(&zero, &zref, &[0.5], 1.0, Scheme::Rk4, 2, &[0.2, 0.1, 0.05, 0.025]),
            Err(OdeError::ZeroErrorFloor { .. })
        ));
    }
}
