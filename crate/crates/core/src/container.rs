//! Versioned little-endian container shared by model checkpoints and
//! adaptation-state snapshots.
//!
//! Layout: `b"TSAD" | version:u8 | kind:u8 | scalar width:u8 | payload |
//! fnv1a64(all preceding bytes):u64`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"TSAD";
pub const VERSION: u8 = 1;
/// Byte offset of the version field.
pub const VERSION_OFFSET: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    Model = 1,
    State = 2,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new<T: Scalar>(kind: Kind) -> Self {
        let mut buf = Vec::with_capacity(256);
        buf.extend_from_slice(MAGIC);
        buf.push(VERSION);
        buf.push(kind as u8);
        buf.push(T::WIDTH as u8);
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn scalar<T: Scalar>(&mut self, v: T) {
        v.write_le(&mut self.buf);
    }

    pub fn scalars<T: Scalar>(&mut self, vs: &[T]) {
        vs.iter().for_each(|&v| v.write_le(&mut self.buf));
    }

    pub fn finish(mut self) -> Vec<u8> {
        let sum = fnv1a64(&self.buf);
        self.buf.extend_from_slice(&sum.to_le_bytes());
        self.buf
    }
}

pub struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Validates header and checksum, leaving the cursor at the payload.
    pub fn open<T: Scalar>(bytes: &'a [u8], kind: Kind) -> Result<Self> {
        let header = MAGIC.len() + 3;
        if bytes.len() < header + 8 {
            return Err(Error::Corrupt("container shorter than its header".into()));
        }
        if &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Corrupt("bad magic".into()));
        }
        let version = bytes[VERSION_OFFSET];
        if version != VERSION {
            return Err(Error::VersionMismatch {
                expected: VERSION,
                found: version,
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8-byte tail"));
        if stored != fnv1a64(body) {
            return Err(Error::Corrupt("checksum mismatch".into()));
        }
        if bytes[5] != kind as u8 {
            return Err(Error::Corrupt(format!(
                "expected container kind {}, found {}",
                kind as u8, bytes[5]
            )));
        }
        if usize::from(bytes[6]) != T::WIDTH {
            return Err(Error::Corrupt(format!(
                "container holds {}-byte scalars, reader expects {}",
                bytes[6],
                T::WIDTH
            )));
        }
        Ok(Self {
            bytes: body,
            pos: header,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Corrupt("payload truncated".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Corrupt("length overflows usize".into()))
    }

    pub fn scalar<T: Scalar>(&mut self) -> Result<T> {
        Ok(T::read_le(self.take(T::WIDTH)?))
    }

    pub fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let remaining = (self.bytes.len() - self.pos) / T::WIDTH;
        if n > remaining {
            return Err(Error::Corrupt("payload truncated".into()));
        }
        (0..n).map(|_| self.scalar()).collect()
    }

    /// Errors if payload bytes remain unread.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing payload bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<u8> {
        let mut enc = Encoder::new::<f64>(Kind::Model);
        enc.u64(3);
        enc.scalars(&[1.0f64, -2.5, 0.1]);
        enc.finish()
    }

    #[test]
    fn round_trip() {
        let bytes = sample();
        let mut dec = Decoder::open::<f64>(&bytes, Kind::Model).unwrap();
        let n = dec.usize().unwrap();
        assert_eq!(dec.scalars::<f64>(n).unwrap(), vec![1.0, -2.5, 0.1]);
        dec.finish().unwrap();
    }

    #[test]
    fn detects_tampering() {
        let mut bytes = sample();
        bytes[VERSION_OFFSET] ^= 0xff;
        assert!(matches!(
            Decoder::open::<f64>(&bytes, Kind::Model),
            Err(Error::VersionMismatch { .. })
        ));

        let mut bytes = sample();
        let k = bytes.len() - 12;
        bytes[k] ^= 1;
        assert!(matches!(
            Decoder::open::<f64>(&bytes, Kind::Model),
            Err(Error::Corrupt(_))
        ));

        let bytes = sample();
        assert!(Decoder::open::<f32>(&bytes, Kind::Model).is_err());
        assert!(Decoder::open::<f64>(&bytes, Kind::State).is_err());
        assert!(Decoder::open::<f64>(&bytes[..10], Kind::Model).is_err());
    }
}
