//! Scalar abstraction shared by the geometry, planner and servo modules.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the numeric core is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + std::iter::Sum + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal must be representable")
    }

    /// Widens to `f64` for reporting and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used where the algorithms need "numerically zero".
    #[inline]
    fn tiny() -> Self {
        Self::epsilon().sqrt() * Self::epsilon().sqrt().sqrt()
    }
}

impl Real for f32 {}
impl Real for f64 {}
