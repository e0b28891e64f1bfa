//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
///
/// Transcendental functions (`exp`, `sin`, fractional powers) appear in every
/// weight and coefficient, so exact rational scalars are not supported.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in the supported scalar types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion used for diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest `x` for which `exp(x)` is finite.
    #[inline]
    fn max_exp_arg() -> Self {
        Self::max_value().ln() * (Self::one() - Self::lit(4.0) * Self::epsilon())
    }
}

impl Real for f32 {}
impl Real for f64 {}
