//! Scalar abstractions for the dense linear-algebra kernels.
//!
//! Two tiers: [`Scalar`] is an ordered field with exact arithmetic allowed
//! (rationals qualify), enough for pivoted elimination. [`Real`] adds the
//! floating-point operations (square roots, exponentials, conversions) that
//! the iterative algorithms need. Production code runs on `f64` through the
//! aliases at the crate root; exact types are used as test oracles.

use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed};
use std::fmt::Debug;

/// Field scalar with an absolute value and a total order on magnitudes.
///
/// Implemented by `f32`/`f64` and by exact types such as `BigRational`.
pub trait Scalar: Num + NumAssign + Signed + Clone + PartialOrd + Debug {}

impl<T> Scalar for T where T: Num + NumAssign + Signed + Clone + PartialOrd + Debug {}

/// Floating-point scalar for the iterative numerics (Cholesky, SVD,
/// power iteration, quadrature nodes, Hermite interpolation).
pub trait Real: Scalar + Float + FromPrimitive + Copy + 'static {
    /// Shorthand for lossless-ish conversion of literal constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in Real type")
    }

    /// Conversion of a count into the scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in Real type")
    }
}

impl<T> Real for T where T: Scalar + Float + FromPrimitive + Copy + 'static {}
