use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar the linear-algebra layer is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Tolerance used for Hermiticity checks: `1e-12` in double precision,
    /// a few hundred ulps otherwise.
    #[inline]
    fn hermitian_tolerance() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(128.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
