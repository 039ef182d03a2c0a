//! MSB-first bit writer and reader.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn write_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        if self.len.is_multiple_of(8) && n.is_multiple_of(8) {
            for i in (0..n / 8).rev() {
                self.bytes.push((value >> (8 * i)) as u8);
            }
            self.len += n as usize;
            return;
        }
        for i in (0..n).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    pub fn write_str(&mut self, bits: &str) {
        for b in bits.bytes() {
            debug_assert!(b == b'0' || b == b'1');
            self.write_bit(b == b'1');
        }
    }

    pub fn append(&mut self, other: &BitWriter) {
        if self.len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        let full = other.len / 8;
        for &b in &other.bytes[..full] {
            self.write_bits(u64::from(b), 8);
        }
        for i in full * 8..other.len {
            self.write_bit(other.bit(i));
        }
    }

    fn bit(&self, i: usize) -> bool {
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    /// Pads with zero bits to the next byte boundary.
    pub fn align(&mut self) {
        self.len = self.bytes.len() * 8;
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// The written bits as a `0`/`1` string.
    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.bit(i) { '1' } else { '0' }).collect()
    }
}

#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    /// Current bit position.
    #[inline]
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() * 8 - self.pos
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        Error::decode(self.pos, msg)
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.data.len() * 8 {
            return Err(self.error("unexpected end of stream"));
        }
        let b = self.data[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64> {
        debug_assert!(n <= 64);
        if n as usize > self.remaining() {
            return Err(self.error("unexpected end of stream"));
        }
        let mut v = 0u64;
        if self.pos.is_multiple_of(8) && n.is_multiple_of(8) {
            for _ in 0..n / 8 {
                v = (v << 8) | u64::from(self.data[self.pos / 8]);
                self.pos += 8;
            }
            return Ok(v);
        }
        for _ in 0..n {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_layout() {
        let mut w = BitWriter::new();
        w.write_str("101");
        w.write_bits(0b11110000, 8);
        assert_eq!(w.len(), 11);
        assert_eq!(w.as_bytes(), &[0b1011_1110, 0b0000_0000]);
        let mut r = BitReader::new(w.as_bytes());
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
        assert_eq!(r.read_bits(8).unwrap(), 0xF0);
    }

    #[test]
    fn append_unaligned() {
        let mut a = BitWriter::new();
        a.write_str("1");
        let mut b = BitWriter::new();
        b.write_str("0110100111");
        a.append(&b);
        assert_eq!(a.to_bit_string(), "10110100111");
        a.align();
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn reading_past_end_is_an_error() {
        let mut r = BitReader::new(&[0xFF]);
        assert!(r.read_bits(8).is_ok());
        assert!(matches!(r.read_bit(), Err(Error::Decode { bit: 8, .. })));
    }
}
