//! Scalar abstraction for the numeric core.
//!
//! The Q-network and its training ops are written once, generic over
//! [`Scalar`], and instantiated at `f32` (the deployed runtime and snapshot
//! wire format) or `f64` (finite-difference gradient oracles in tests).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating-point scalar usable by the network math.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Default
    + Copy
    + Send
    + Sync
    + 'static
{
    /// Widen to `f64` (lossless for both supported types).
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Convert an `f64` constant into the working scalar type.
///
/// Panics if the value is not representable (never happens for the finite
/// hyperparameters and features this crate feeds through it).
#[inline]
pub fn s<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("finite f64 converts to scalar")
}
