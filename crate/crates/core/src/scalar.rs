//! Scalar abstraction shared by the floating point routines.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used for sequence values and kernel evaluation: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; every finite `f64` maps to some value of `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Converts a nonnegative integer count (a squared distance or a cardinality).
    fn of_count(x: u128) -> Self {
        Self::from_u128(x).unwrap_or_else(Self::infinity)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Error-free transformation `a + b = s + e` (Knuth's TwoSum).
#[inline]
pub(crate) fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Unevaluated sum `hi + lo` carried with roughly twice the working precision.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct DoubleWord<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Real> DoubleWord<T> {
    pub fn zero() -> Self {
        Self { hi: T::zero(), lo: T::zero() }
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn from_value(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub fn value(self) -> T {
        self.hi + self.lo
    }
}
