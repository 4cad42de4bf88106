//! Scalar abstraction for logits and model weights.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::LinalgScalar;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the scorers compute in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + LinalgScalar + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
