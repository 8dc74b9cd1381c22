//! Scalar abstraction for the generic numeric core.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};

/// Floating-point scalar usable by the moment-propagation math.
///
/// Implemented for `f32` and `f64`. The gradient engine and everything
/// above it instantiate `f64`; single precision compiles but is not a
/// supported mode for training (the finite-difference gradient checks
/// assume 64-bit arithmetic).
pub trait Real:
    Float + FromPrimitive + NumAssign + LinalgScalar + ScalarOperand + Debug + Display + Send + Sync
{
    /// Converts an `f64` constant, panicking only for non-representable
    /// values (which cannot happen for the fixed constants used here).
    #[inline]
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("constant representable in Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
