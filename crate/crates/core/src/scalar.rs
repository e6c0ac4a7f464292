//! Scalar abstraction shared by every analytic routine.
//!
//! All kernels are written once against [`Real`] and instantiated for `f32`,
//! `f64` and the double-double [`Extended`](crate::Extended) type. The
//! alternating moment sums need the latter: at harmonic 15 their terms reach
//! ~1e19 while the result is O(1).

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

use crate::double_double::DoubleDouble;
use crate::specfun::EvalTolerance;

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Series tolerance matched to the working precision.
    fn series_tolerance() -> EvalTolerance;

    /// Converts an `f64` literal or parameter.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to every Real")
    }

    /// Nearest `f64`, used for reporting and ordering.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Real for f32 {
    fn series_tolerance() -> EvalTolerance {
        EvalTolerance::new(1e-7, 1e-37, 10_000).expect("valid tolerance")
    }
}

impl Real for f64 {
    fn series_tolerance() -> EvalTolerance {
        EvalTolerance::default()
    }
}

impl Real for DoubleDouble {
    fn series_tolerance() -> EvalTolerance {
        EvalTolerance::new(1e-31, 1e-300, 10_000).expect("valid tolerance")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_is_exact_for_extended() {
        let x = <DoubleDouble as Real>::lit(5.21);
        assert_eq!(x.hi(), 5.21);
        assert_eq!(x.lo(), 0.0);
    }

    #[test]
    fn extended_pi_carries_more_digits() {
        let pi = DoubleDouble::PI();
        assert_eq!(pi.hi(), std::f64::consts::PI);
        assert!(pi.lo() != 0.0);
    }
}
