//! Data generation: Gaussian-random-field initial conditions, a
//! pseudo-spectral reference solver for viscous Burgers, the analytic
//! truncated-series wave solution, and on-disk datasets with exact
//! subsampled training views.

mod burgers;
mod dataset;
mod grf;
mod wave;

pub use burgers::{solve_burgers, BurgersOptions};
pub use dataset::{make_dataset, Dataset, DatasetKind, Manifest, WaveParams};
pub use grf::{grf_eigenvalue, sample_grf, GrfSpec};
pub use wave::{wave_coefficients, wave_solution, WaveSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("solution blew up (non-finite) at t = {t}")]
    BlowUp { t: f64 },
    #[error("resolution {resolution} incompatible: {reason}")]
    BadResolution { resolution: usize, reason: String },
    #[error("subsampling factor {factor} does not divide {points} − 1")]
    BadSubsampling { factor: usize, points: usize },
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset format: {0}")]
    Format(String),
    #[error("sample index {index} out of range ({count} samples)")]
    SampleOutOfRange { index: usize, count: usize },
}

pub type Result<T> = std::result::Result<T, PdeError>;

/// Scalar field on a tensor grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: crate::quadrature::TensorGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: crate::quadrature::TensorGrid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        GridFunction { grid, values }
    }
}
