//! Scalar abstraction shared by the numeric modules.
//!
//! Everything numeric in the crate is generic over [`Scalar`], which is
//! implemented for `f32` (the storage type of the interchange format) and
//! `f64`. Reductions and dot products always accumulate in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point element type: `f32` or `f64`.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Widen to the accumulation type.
    fn to_wide(self) -> f64;

    /// Round an accumulated value back to storage precision. Values out of
    /// range become infinite, as with an `as` cast.
    fn from_wide(v: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn to_wide(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_wide(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_wide(self) -> f64 {
        self
    }

    #[inline]
    fn from_wide(v: f64) -> Self {
        v
    }
}
