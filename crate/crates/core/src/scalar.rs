//! Floating-point scalar abstraction.
//!
//! Descriptors, centroids, coding coefficients and pooled representations are
//! stored in any [`Scalar`] (`f32` or `f64`). Accumulations whose rounding
//! matters (softmax normalizers, k-means sums, Beta fits) run in `f64` and the
//! result is cast back to the storage type.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Storage scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Tolerance for quantities that must sum to one after a single
    /// normalization (coding rows, one pruning step).
    const TIGHT_TOL: f64;
    /// Tolerance for quantities that sum to one after pooling or a chain of
    /// pruning steps.
    const LOOSE_TOL: f64;
    /// Type name used in file headers.
    const NAME: &'static str;

    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {
    const TIGHT_TOL: f64 = 1e-6;
    const LOOSE_TOL: f64 = 1e-5;
    const NAME: &'static str = "f32";
}

impl Scalar for f64 {
    const TIGHT_TOL: f64 = 1e-12;
    const LOOSE_TOL: f64 = 1e-9;
    const NAME: &'static str = "f64";
}
