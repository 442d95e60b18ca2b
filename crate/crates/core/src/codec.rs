//! Minimal little-endian byte codec.
//!
//! Snapshots and feature-model files need bit-exact, platform-independent
//! serialization. Everything here is fixed-width little-endian; floats
//! travel as their IEEE-754 bit patterns.

use alloc::vec::Vec;
use core::fmt;

/// Decoding failure: the byte stream did not match the expected layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    /// Fewer bytes than the layout requires.
    UnexpectedEnd,
    /// Bytes left over after the layout was fully read.
    TrailingBytes,
    /// A magic number or version marker did not match.
    BadMagic,
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::UnexpectedEnd => write!(f, "byte stream ended early"),
            CodecError::TrailingBytes => write!(f, "unexpected trailing bytes"),
            CodecError::BadMagic => write!(f, "bad magic or version marker"),
        }
    }
}

impl core::error::Error for CodecError {}

/// Cursor over a byte slice with fixed-width little-endian reads.
pub struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

macro_rules! read_le {
    ($name:ident, $ty:ty) => {
        pub fn $name(&mut self) -> Result<$ty, CodecError> {
            const N: usize = core::mem::size_of::<$ty>();
            let raw = self.take(N)?;
            let mut buf = [0u8; N];
            buf.copy_from_slice(raw);
            Ok(<$ty>::from_le_bytes(buf))
        }
    };
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::UnexpectedEnd);
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    read_le!(read_u8, u8);
    read_le!(read_u16, u16);
    read_le!(read_u32, u32);
    read_le!(read_u64, u64);
    read_le!(read_u128, u128);
    read_le!(read_i8, i8);
    read_le!(read_i16, i16);

    pub fn read_f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_bits(self.read_u64()?))
    }

    /// Asserts the stream was consumed exactly.
    pub fn finish(self) -> Result<(), CodecError> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes)
        }
    }
}

/// Little-endian appends onto a byte buffer.
pub trait ByteWriter {
    fn put_bytes(&mut self, bytes: &[u8]);
    fn put_u8(&mut self, v: u8);
    fn put_u16(&mut self, v: u16);
    fn put_u32(&mut self, v: u32);
    fn put_u64(&mut self, v: u64);
    fn put_u128(&mut self, v: u128);
    fn put_i8(&mut self, v: i8);
    fn put_i16(&mut self, v: i16);
    fn put_f64(&mut self, v: f64);
}

impl ByteWriter for Vec<u8> {
    fn put_bytes(&mut self, bytes: &[u8]) {
        self.extend_from_slice(bytes);
    }
    fn put_u8(&mut self, v: u8) {
        self.push(v);
    }
    fn put_u16(&mut self, v: u16) {
        self.extend_from_slice(&v.to_le_bytes());
    }
    fn put_u32(&mut self, v: u32) {
        self.extend_from_slice(&v.to_le_bytes());
    }
    fn put_u64(&mut self, v: u64) {
        self.extend_from_slice(&v.to_le_bytes());
    }
    fn put_u128(&mut self, v: u128) {
        self.extend_from_slice(&v.to_le_bytes());
    }
    fn put_i8(&mut self, v: i8) {
        self.push(v as u8);
    }
    fn put_i16(&mut self, v: i16) {
        self.extend_from_slice(&v.to_le_bytes());
    }
    fn put_f64(&mut self, v: f64) {
        self.put_u64(v.to_bits());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_all_widths() {
        let mut buf = Vec::new();
        buf.put_u8(0xAB);
        buf.put_u16(0xBEEF);
        buf.put_u32(0xDEAD_BEEF);
        buf.put_u64(0x0123_4567_89AB_CDEF);
        buf.put_u128(u128::MAX - 7);
        buf.put_i8(-5);
        buf.put_i16(-1234);
        buf.put_f64(-0.125);

        let mut r = ByteReader::new(&buf);
        assert_eq!(r.read_u8().unwrap(), 0xAB);
        assert_eq!(r.read_u16().unwrap(), 0xBEEF);
        assert_eq!(r.read_u32().unwrap(), 0xDEAD_BEEF);
        assert_eq!(r.read_u64().unwrap(), 0x0123_4567_89AB_CDEF);
        assert_eq!(r.read_u128().unwrap(), u128::MAX - 7);
        assert_eq!(r.read_i8().unwrap(), -5);
        assert_eq!(r.read_i16().unwrap(), -1234);
        assert_eq!(r.read_f64().unwrap(), -0.125);
        r.finish().unwrap();
    }

    #[test]
    fn f64_is_bit_exact() {
        for v in [0.0, -0.0, f64::INFINITY, f64::MIN_POSITIVE, 1.0 / 3.0] {
            let mut buf = Vec::new();
            buf.put_f64(v);
            let mut r = ByteReader::new(&buf);
            assert_eq!(r.read_f64().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn short_reads_and_trailing_bytes_error() {
        let mut r = ByteReader::new(&[1, 2]);
        assert_eq!(r.read_u32(), Err(CodecError::UnexpectedEnd));

        let mut r = ByteReader::new(&[1, 2, 3]);
        r.read_u16().unwrap();
        assert_eq!(r.finish(), Err(CodecError::TrailingBytes));
    }
}
