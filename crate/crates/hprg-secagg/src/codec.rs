//! Length-prefixed wire encoding shared by every serialized structure.
//!
//! Every variable-length field is written as a 4-byte big-endian byte count
//! followed by the raw bytes. Big integers use a minimal big-endian byte
//! string (no leading zero bytes; zero encodes as the empty string).

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("input ended before a complete field was read")]
    UnexpectedEnd,
    #[error("trailing bytes after the last field")]
    TrailingBytes,
    #[error("malformed field: {0}")]
    Malformed(&'static str),
}

/// Appends a 4-byte big-endian length prefix followed by `data`.
pub fn put_block(out: &mut Vec<u8>, data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    out.extend_from_slice(data);
}

pub fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

/// Minimal big-endian bytes of `v`; zero becomes the empty string.
pub fn biguint_bytes(v: &BigUint) -> Vec<u8> {
    if v.is_zero() {
        Vec::new()
    } else {
        v.to_bytes_be()
    }
}

/// Length-prefixed minimal big-endian encoding of `v`.
pub fn put_biguint(out: &mut Vec<u8>, v: &BigUint) {
    put_block(out, &biguint_bytes(v));
}

/// Sequential reader over a length-prefixed byte string.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() - self.pos < n {
            return Err(CodecError::UnexpectedEnd);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn block(&mut self) -> Result<&'a [u8], CodecError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn biguint(&mut self) -> Result<BigUint, CodecError> {
        let bytes = self.block()?;
        if bytes.first() == Some(&0) {
            return Err(CodecError::Malformed("leading zero byte in integer"));
        }
        Ok(BigUint::from_bytes_be(bytes))
    }

    /// Succeeds only when every input byte has been consumed.
    pub fn finish(self) -> Result<(), CodecError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_encodes_empty() {
        let mut out = Vec::new();
        put_biguint(&mut out, &BigUint::zero());
        assert_eq!(out, vec![0, 0, 0, 0]);
        let mut r = Reader::new(&out);
        assert_eq!(r.biguint().unwrap(), BigUint::zero());
        r.finish().unwrap();
    }

    #[test]
    fn rejects_non_minimal() {
        let mut out = Vec::new();
        put_block(&mut out, &[0, 7]);
        let mut r = Reader::new(&out);
        assert!(matches!(r.biguint(), Err(CodecError::Malformed(_))));
    }

    #[test]
    fn truncation_detected() {
        let mut out = Vec::new();
        put_block(&mut out, b"hello");
        out.truncate(out.len() - 1);
        let mut r = Reader::new(&out);
        assert_eq!(r.block().unwrap_err(), CodecError::UnexpectedEnd);
    }

    proptest! {
        #[test]
        fn biguint_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let v = BigUint::from_bytes_be(&bytes);
            let mut out = Vec::new();
            put_biguint(&mut out, &v);
            let mut r = Reader::new(&out);
            prop_assert_eq!(r.biguint().unwrap(), v);
            prop_assert!(r.finish().is_ok());
        }
    }
}
