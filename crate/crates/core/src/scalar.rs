//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion back to `f64`, used for diagnostics and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for [`Scalar::lit`].
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

/// `e^z - 1 - z`, accurate for small `|z|`.
pub fn expm1_minus_linear<T: Scalar>(z: T) -> T {
    if z.abs() < lit(0.1) {
        // z^2/2! + z^3/3! + ... ; 12 terms reach full f64 precision for |z| < 0.1
        let mut term = z * z / lit(2.0);
        let mut sum = term;
        for k in 3..15 {
            term = term * z / T::count(k);
            sum = sum + term;
        }
        sum
    } else {
        z.exp_m1() - z
    }
}

/// Probability-weighted sum `sum_i p_i x_i`.
pub fn expectation<T: Scalar>(probs: &[T], values: &[T]) -> T {
    probs.iter().zip(values).map(|(&p, &x)| p * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_minus_linear_matches_direct_formula() {
        for &z in &[-3.0_f64, -0.5, -0.09, -0.02, 0.05, 0.099, 0.1, 2.0] {
            let direct = z.exp_m1() - z;
            let got = expm1_minus_linear(z);
            let scale = (z * z / 2.0).max(1e-300);
            assert!(
                ((got - direct) / scale).abs() < 1e-7,
                "z={z}: {got} vs {direct}"
            );
        }
        assert_eq!(expm1_minus_linear(0.0_f64), 0.0);
        let small = expm1_minus_linear(1e-6_f64);
        let series = 0.5e-12 + 1e-18 / 6.0 + 1e-24 / 24.0;
        assert!(((small - series) / series).abs() < 1e-14);
    }

    #[test]
    fn f32_literals() {
        let x: f32 = lit(0.25);
        assert_eq!(x, 0.25_f32);
        assert_eq!(f32::count(3), 3.0);
    }
}
