//! Scalar abstraction: every numerical routine in this crate is generic over
//! [`Real`], implemented for `f32` and `f64`.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::distr::uniform::SampleUniform;

/// Floating-point scalar used throughout the crate.
///
/// The bound set is what the solvers actually need: IEEE float semantics
/// (NaN/Inf propagation matters for barrier objectives), float constants,
/// conversions for literals and counters, and uniform sampling support.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + Send
    + Sync
    + std::fmt::Debug
    + std::fmt::Display
    + 'static
{
    /// Convert an `f64` literal. Panics only if the value is not
    /// representable at all, which cannot happen for f32/f64 targets.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal conversion")
    }

    /// Convert a count into the scalar type.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count conversion")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::cast(0.5)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + SampleUniform
        + Send
        + Sync
        + std::fmt::Debug
        + std::fmt::Display
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn casts_round_trip() {
        assert_eq!(f64::cast(0.25), 0.25);
        assert_eq!(f32::cast(0.25), 0.25f32);
        assert_eq!(f64::of_usize(7), 7.0);
        assert_eq!(f64::two(), 2.0);
    }
}
