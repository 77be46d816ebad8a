//! Scalar abstraction for the numeric core.
//!
//! Model weights, activations and statistics are generic over [`Scalar`] so
//! that training can run in `f32` while gradient checks and statistics run
//! in `f64`.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar usable throughout the numeric core: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from f64 (rounds for f32).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    /// Widen to f64 for accumulation and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// IEEE-754 bit pattern, widened to u64, for bit-exact serialization.
    fn to_bits_u64(self) -> u64;

    /// Inverse of [`Scalar::to_bits_u64`].
    fn from_bits_u64(bits: u64) -> Self;

    /// Short dtype tag recorded in checkpoints.
    const DTYPE: &'static str;
}

impl Scalar for f32 {
    fn to_bits_u64(self) -> u64 {
        self.to_bits() as u64
    }

    fn from_bits_u64(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }

    const DTYPE: &'static str = "f32";
}

impl Scalar for f64 {
    fn to_bits_u64(self) -> u64 {
        self.to_bits()
    }

    fn from_bits_u64(bits: u64) -> Self {
        f64::from_bits(bits)
    }

    const DTYPE: &'static str = "f64";
}
