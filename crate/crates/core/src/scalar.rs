use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the solver is generic over: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts a literal. Panics only if the target type cannot represent a finite f64,
    /// which never happens for f32/f64.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range for scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer out of range for scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Binomial coefficient as a scalar, computed multiplicatively.
pub(crate) fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for m in 0..k {
        acc = acc * T::from_usize_lossy(n - m) / T::from_usize_lossy(m + 1);
    }
    acc
}

/// Falling factorial j(j-1)...(j-k+1).
pub(crate) fn falling_factorial<T: Scalar>(j: usize, k: usize) -> T {
    if k > j {
        return T::zero();
    }
    (0..k).fold(T::one(), |acc, m| acc * T::from_usize_lossy(j - m))
}
