//! Reduced-order neural operator modeling (RONOM) for time-dependent PDEs.
//!
//! The pipeline maps an initial condition, sampled at an arbitrary
//! resolution, to the PDE solution at arbitrary space/time queries:
//!
//! 1. **Encode** — a regularized least-squares projection onto a Gaussian
//!    basis lifts the samples to a function, a measurement operator turns the
//!    projection into a vector, and a small conv net maps it to a latent code.
//! 2. **Flow** — a neural ODE evolves the latent code; Hermite interpolation
//!    of the solver nodes gives a time-continuous trajectory.
//! 3. **Decode** — a conv net predicts values at fixed centers, and Gaussian
//!    kernel optimal recovery lifts those values back to a function.
//!
//! Alongside the model, the crate ships executable error certificates: the
//! coefficient error bound of the discretized projection, quadrature error
//! bounds, ODE-plus-interpolation convergence orders, decoder Lipschitz
//! bounds, a residual-based a-posteriori bound, and the combined
//! discretization error estimate for the whole pipeline.
//!
//! Core numerics are generic over the scalar type (`f32`/`f64`, and exact
//! rationals where elimination is used as a test oracle); the pipeline
//! itself runs in `f64` through the aliases below.

pub mod basis;
// pub mod bounds;
// pub mod cli;
pub mod latent_ode;
// pub mod model;
pub mod net;
pub mod numerics;
// pub mod pde;
pub mod projection;
pub mod quadrature;
pub mod scalar;
// pub mod train;

/// Working-precision matrix for the pipeline.
pub type MatF = numerics::Matrix<f64>;
/// Working-precision vector for the pipeline.
pub type VecF = numerics::Vector<f64>;
