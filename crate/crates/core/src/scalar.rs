use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by the sequence-space and covering primitives.
///
/// Implemented for `f32` and `f64`. The linear-algebra heavy modules
/// (thickness brackets, embeddings, the random ensemble) work in `f64`.
pub trait Scalar:
    'static
    + Copy
    + Send
    + Sync
    + Default
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
{
    /// Lossless-enough conversion from `f64` constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
