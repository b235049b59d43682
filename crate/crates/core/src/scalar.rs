//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point type the detector can be instantiated with.
///
/// Implemented for `f32` and `f64`. Besides the usual float arithmetic the
/// trait carries a fixed-width little-endian codec so checkpoints can store
/// parameters bit-exactly regardless of the concrete type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Width in bytes of the encoded value; doubles as the type tag in
    /// serialized containers.
    const WIDTH: usize;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `Self::WIDTH` bytes.
    fn read_le(bytes: &[u8]) -> Self;

    /// Lossy conversion from `f64`, used for constants and RNG draws.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 always converts to a float type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const WIDTH: usize = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(bytes);
        f32::from_le_bytes(buf)
    }
}

impl Scalar for f64 {
    const WIDTH: usize = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(bytes);
        f64::from_le_bytes(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_round_trips_bits() {
        for &x in &[0.0f64, -0.0, 1.5, f64::MIN_POSITIVE, 1e300, -7.25e-12] {
            let mut buf = Vec::new();
            x.write_le(&mut buf);
            assert_eq!(buf.len(), f64::WIDTH);
            assert_eq!(f64::read_le(&buf).to_bits(), x.to_bits());
        }
        let mut buf = Vec::new();
        3.25f32.write_le(&mut buf);
        assert_eq!(f32::read_le(&buf), 3.25);
    }
}
