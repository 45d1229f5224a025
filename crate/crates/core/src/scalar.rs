//! Numeric abstractions: exact ring arithmetic for stencil coefficients and
//! a floating-point scalar trait for everything else.

use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Ring arithmetic sufficient for evaluating stencil rows.
///
/// Implemented by both the primitive signed integers and the floating-point
/// types, so stencil identities (for example the annihilation of `2ⁿ` by the
/// radial row) can be asserted in exact integer arithmetic while the same
/// code path serves floating-point evaluation.
pub trait Coeff:
    Copy
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + num_traits::Zero
    + num_traits::One
    + FromPrimitive
{
    /// Lossless embedding of a small integer stencil coefficient.
    fn from_coeff(c: i64) -> Self {
        Self::from_i64(c).expect("stencil coefficient out of range for scalar type")
    }
}

impl<T> Coeff for T where
    T: Copy
        + PartialEq
        + Debug
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
        + num_traits::Zero
        + num_traits::One
        + FromPrimitive
{
}

/// Floating-point scalar used for fields, metrics, and derived constants.
///
/// Satisfied by `f32` and `f64`; the crate-level alias [`crate::Real`]
/// selects the default precision.
pub trait Scalar: Coeff + Float + FloatConst + FromPrimitive + ToPrimitive + Display + Default + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum3<T: Coeff>(a: T, b: T, c: T) -> T {
        a + b + c
    }

    #[test]
    fn coeff_covers_integers_and_floats() {
        assert_eq!(sum3(1i64, 2i64, 3i64), 6);
        assert_eq!(sum3(1.0f64, 2.0, 3.0), 6.0);
        assert_eq!(i64::from_coeff(-4), -4);
        assert_eq!(f32::from_coeff(6), 6.0);
    }

    #[test]
    fn scalar_is_object_safe_enough_for_generics() {
        fn pi<T: Scalar>() -> T {
            T::PI()
        }
        assert!((pi::<f64>() - std::f64::consts::PI).abs() < 1e-15);
        assert!((pi::<f32>() - std::f32::consts::PI).abs() < 1e-6);
    }
}
