//! Scalar abstraction for the indicator math.

use std::fmt::Debug;

/// Floating-point scalar the visibility and indicator computations run on.
pub trait Float: num_traits::Float + num_traits::FromPrimitive + Debug + Send + Sync {
    /// Upper bound of the indicator scale.
    fn hundred() -> Self {
        Self::from_u8(100).unwrap()
    }
}

impl Float for f32 {}
impl Float for f64 {}
