//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! The dynamics, the optimal control problem and the solver are written once
//! against [`Real`] and instantiated for `f64` (the default aliases exported at
//! the crate root) or `f32`.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type usable by the dynamics and the optimizer.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts a literal. Every supported type represents `f64` literals
    /// up to rounding, so this never fails.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(f64::lit(0.1).as_f64(), 0.1);
        assert_eq!(f32::lit(0.5).as_f64(), 0.5);
    }
}
