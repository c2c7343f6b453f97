//! Scalar abstraction shared by the geometry, camera and normal-estimation code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Converts a pixel index or count.
    #[inline]
    fn from_index(i: usize) -> Self {
        Self::from_usize(i).expect("index representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}
