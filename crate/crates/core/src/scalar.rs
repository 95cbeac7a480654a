//! Scalar abstraction for the numeric core.
//!
//! All geometry, kinematics and metric code is generic over [`Scalar`] so the
//! same routines run in `f32` or `f64`. The pipeline instantiates the crate
//! root alias [`crate::Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar used throughout the geometry and metric code.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + Copy
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Widening conversion for accumulation in double precision.
    fn as_f64(self) -> f64;
    /// Conversion back from an `f64` accumulator.
    fn of_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn of_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    fn as_f64(self) -> f64 {
        self
    }
    fn of_f64(v: f64) -> Self {
        v
    }
}
