//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable throughout the crate (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for types that cannot represent
    /// ordinary finite constants, which no implementor does.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Streaming arithmetic mean. A run of identical samples yields that sample
/// exactly, which keeps uniform-offset metrics free of summation drift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunningMean<T> {
    mean: T,
    count: usize,
}

impl<T: Real> Default for RunningMean<T> {
    fn default() -> Self {
        Self {
            mean: T::zero(),
            count: 0,
        }
    }
}

impl<T: Real> RunningMean<T> {
    pub fn push(&mut self, x: T) {
        self.count += 1;
        self.mean = self.mean + (x - self.mean) / T::from_usize_lossy(self.count);
    }

    /// Pools another accumulator as if all its samples had been pushed here.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        let total = self.count + other.count;
        let share = T::from_usize_lossy(other.count) / T::from_usize_lossy(total);
        self.mean = self.mean + (other.mean - self.mean) * share;
        self.count = total;
    }

    /// Mean of the samples seen so far, `None` when empty.
    pub fn mean(&self) -> Option<T> {
        (self.count > 0).then_some(self.mean)
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl<T: Real> FromIterator<T> for RunningMean<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}
