//! Floating-point substrate: all math in this crate is generic over [`Scalar`].

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Scalar type the training math runs on: `f32` or `f64`.
///
/// The byte-level methods exist for checkpoint serialization and for the
/// bitwise parameter hashes behind the freeze and warm-start contracts.
pub trait Scalar:
    Float
    + NumAssignOps
    + ScalarOperand
    + LinalgScalar
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Width of the little-endian encoding in bytes.
    const WIDTH: usize;

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    /// Raw bit pattern, zero-extended to 64 bits.
    fn bit_pattern(self) -> u64;
}

impl Scalar for f32 {
    const WIDTH: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().expect("short f32 read"))
    }

    fn bit_pattern(self) -> u64 {
        self.to_bits() as u64
    }
}

impl Scalar for f64 {
    const WIDTH: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().expect("short f64 read"))
    }

    fn bit_pattern(self) -> u64 {
        self.to_bits()
    }
}

/// Cast an `f64` constant into the working scalar type.
#[inline]
pub fn real<F: Scalar>(x: f64) -> F {
    F::from(x).expect("f64 does not fit the scalar type")
}
