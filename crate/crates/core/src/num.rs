//! Scalar abstraction for the real-valued parts of the search.
//!
//! Positions are discrete, but the operators that move them (sine, cosine,
//! Lévy flight), the radius schedule and the Q-table all work in a real
//! scalar. Everything in those modules is generic over [`Real`], which is
//! implemented for `f32` and `f64`.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point scalar used by the operators, the schedule and the Q-table.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or draw.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    /// Widening conversion used for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
