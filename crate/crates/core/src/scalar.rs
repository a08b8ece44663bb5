use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type the numeric core is written against.
///
/// Implemented for `f32` and `f64`. The simulator itself runs on `f64`;
/// `f32` is supported for the library surface but oracle tolerances are
/// only pinned for `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or statistic into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `acc += w * x`, elementwise.
pub(crate) fn axpy<T: Scalar>(acc: &mut [T], w: T, x: &[T]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += w * v;
    }
}
