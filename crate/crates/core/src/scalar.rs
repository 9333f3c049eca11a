//! Numeric backends for factor tables.
//!
//! Every table in the engine is generic over [`Scalar`]. Floating point
//! (`f32`, `f64`) is the everyday choice; [`BigRational`] gives exact
//! arithmetic, which makes oracle comparisons bit-for-bit rather than
//! tolerance-based.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A nonnegative probability-like quantity that factor tables can hold.
pub trait Scalar:
    Num + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// `true` for values that may appear in a factor table: finite and `>= 0`.
    fn is_valid_entry(&self) -> bool;

    /// Machine epsilon of the backend, 0 for exact arithmetic.
    fn epsilon() -> f64 {
        0.0
    }

    /// Lossy conversion for reporting and tolerance checks.
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `num / den`, computed in the scalar's own arithmetic.
    fn ratio(num: u64, den: u64) -> Self {
        let n = Self::from_u64(num).expect("u64 is representable");
        let d = Self::from_u64(den).expect("u64 is representable");
        n / d
    }

    /// `a / b` with the `0/0 := 0` convention for impossible contexts.
    fn div_or_zero(a: &Self, b: &Self) -> Self {
        if b.is_zero() {
            Self::zero()
        } else {
            a.clone() / b.clone()
        }
    }
}

macro_rules! impl_float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn is_valid_entry(&self) -> bool {
                self.is_finite() && *self >= 0.0
            }

            fn epsilon() -> f64 {
                <$t>::EPSILON as f64
            }
        }
    )*};
}

impl_float_scalar!(f32, f64);

impl Scalar for BigRational {
    fn is_valid_entry(&self) -> bool {
        *self >= BigRational::from_integer(BigInt::from(0))
    }
}
