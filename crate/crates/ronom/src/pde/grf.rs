//! Periodic Gaussian random field on [0,1] with covariance operator
//! scaling·amplitude·(−Δ + shift·I)⁻², sampled through its exact Fourier
//! eigen-expansion: λ_k = scaling·amplitude·(4π²k² + shift)⁻², truncated at
//! the grid Nyquist mode.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GrfSpec {
    /// 250² in the shipped experiments.
    pub amplitude: f64,
    /// 25² in the shipped experiments.
    pub shift: f64,
    /// √2 in the shipped experiments.
    pub scaling: f64,
    /// Grid points including the duplicated periodic endpoint (e.g. 1025).
    pub resolution: usize,
    pub seed: u64,
}

impl Default for GrfSpec {
    fn default() -> Self {
        GrfSpec {
            amplitude: 250.0 * 250.0,
            shift: 25.0 * 25.0,
            scaling: std::f64::consts::SQRT_2,
            resolution: 1025,
            seed: 0,
        }
    }
}

/// Eigenvalue λ_k of the covariance operator for Fourier mode k.
pub fn grf_eigenvalue(spec: &GrfSpec, k: usize) -> f64 {
    let om = 4.0 * std::f64::consts::PI * std::f64::consts::PI * (k * k) as f64 + spec.shift;
    spec.scaling * spec.amplitude / (om * om)
}

/// Draws one field on the periodic grid x_j = j/(resolution−1). The stream
/// is keyed on (seed, sample_index), so any sample regenerates identically
/// regardless of generation order. Returns `resolution` values with the
/// periodic endpoint duplicated.
pub fn sample_grf(spec: &GrfSpec, sample_index: u64) -> Vec<f64> {
    assert!(spec.resolution >= 65, "resolution must be at least 65");
    let n = spec.resolution - 1;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    rng.set_stream(sample_index);
    let normal = StandardNormal;

    // cos/sin lookup over the cyclic group: cos(2πkj/n) = table[(k·j) mod n]
    let mut cos_t = vec![0.0f64; n];
    let mut sin_t = vec![0.0f64; n];
    for (m, (c, s)) in cos_t.iter_mut().zip(sin_t.iter_mut()).enumerate() {
        let th = std::f64::consts::TAU * m as f64 / n as f64;
        *c = th.cos();
        *s = th.sin();
    }

    let mut u = vec![0.0f64; n];
    let xi0: f64 = normal.sample(&mut rng);
    let base = grf_eigenvalue(spec, 0).sqrt() * xi0;
    u.iter_mut().for_each(|v| *v = base);
    let sqrt2 = std::f64::consts::SQRT_2;
    for k in 1..=n / 2 {
        let a: f64 = normal.sample(&mut rng);
        let b: f64 = normal.sample(&mut rng);
        let amp = grf_eigenvalue(spec, k).sqrt() * sqrt2;
        let (ca, cb) = (amp * a, amp * b);
        let mut idx = 0usize;
        for uj in u.iter_mut() {
            *uj += ca * cos_t[idx] + cb * sin_t[idx];
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
    }
    let mut out = u;
    out.push(out[0]);
    out
}
