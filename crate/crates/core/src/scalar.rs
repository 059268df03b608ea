//! Floating point abstraction for window-level computations.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Real scalar usable for sample windows and empirical estimators.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lossless-enough conversion from `f64` (rounds for `f32`).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Widening conversion to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
