//! Scalar abstraction: everything geometric is generic over [`Real`],
//! instantiated as `f32` or `f64` (aliases at the crate root).

use nalgebra::{RealField, SimdValue};
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the geometry kernels.
pub trait Real:
    RealField
    + SimdValue<Element = Self, SimdBool = bool>
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` constant (config values, literals).
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite constant")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Degrees to radians.
    #[inline]
    fn radians(self) -> Self {
        self * Self::pi() / Self::of(180.0)
    }

    #[inline]
    fn maxr(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn minr(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    #[inline]
    fn clampr(self, lo: Self, hi: Self) -> Self {
        self.maxr(lo).minr(hi)
    }
}

impl Real for f32 {}
impl Real for f64 {}
