//! Fixed 20-byte stream header.

use crate::error::{Error, Result};
use crate::frame::{CTU_SIZE, MAX_FRAME_AREA};
use crate::quant::QuantConfig;

pub const MAGIC: [u8; 4] = *b"BTBD";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub padded_width: u16,
    pub padded_height: u16,
    pub original_width: u16,
    pub original_height: u16,
    pub frame_count: u32,
    pub q: u8,
    pub search_width: u8,
    pub gop: u8,
}

impl StreamHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..4].copy_from_slice(&MAGIC);
        b[4] = VERSION;
        b[5..7].copy_from_slice(&self.padded_width.to_be_bytes());
        b[7..9].copy_from_slice(&self.padded_height.to_be_bytes());
        b[9..11].copy_from_slice(&self.original_width.to_be_bytes());
        b[11..13].copy_from_slice(&self.original_height.to_be_bytes());
        b[13..17].copy_from_slice(&self.frame_count.to_be_bytes());
        b[17] = self.q;
        b[18] = self.search_width;
        b[19] = self.gop;
        b
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::decode(bytes.len() * 8, "stream shorter than header"));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::decode(0, "bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(Error::decode(32, format!("unsupported version {}", bytes[4])));
        }
        let u16_at = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
        let h = StreamHeader {
            padded_width: u16_at(5),
            padded_height: u16_at(7),
            original_width: u16_at(9),
            original_height: u16_at(11),
            frame_count: u32::from_be_bytes([bytes[13], bytes[14], bytes[15], bytes[16]]),
            q: bytes[17],
            search_width: bytes[18],
            gop: bytes[19],
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        match self.problem() {
            Some(msg) => Err(Error::decode(0, format!("invalid header: {msg}"))),
            None => Ok(()),
        }
    }

    /// First inconsistency found in the fields, if any.
    pub fn problem(&self) -> Option<&'static str> {
        let (pw, ph) = (usize::from(self.padded_width), usize::from(self.padded_height));
        let (ow, oh) = (usize::from(self.original_width), usize::from(self.original_height));
        if pw == 0 || ph == 0 || pw % CTU_SIZE != 0 || ph % CTU_SIZE != 0 {
            return Some("padded dimensions must be positive multiples of 64");
        }
        if pw * ph > MAX_FRAME_AREA {
            return Some("frame area too large");
        }
        if ow == 0 || oh == 0 || ow > pw || oh > ph || pw - ow >= CTU_SIZE || ph - oh >= CTU_SIZE {
            return Some("original dimensions inconsistent with padding");
        }
        if self.frame_count == 0 {
            return Some("no frames");
        }
        if QuantConfig::new(u32::from(self.q)).is_err() {
            return Some("q must be odd and in 1..=15");
        }
        if self.search_width == 0 {
            return Some("search width must be positive");
        }
        if self.gop == 0 {
            return Some("GOP period must be positive");
        }
        None
    }

    pub fn quant(&self) -> QuantConfig {
        QuantConfig::new(u32::from(self.q)).expect("validated header")
    }

    /// Whether frame `t` is intra coded.
    pub fn is_intra(&self, t: usize) -> bool {
        t.is_multiple_of(usize::from(self.gop))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StreamHeader {
        StreamHeader {
            padded_width: 128,
            padded_height: 128,
            original_width: 128,
            original_height: 96,
            frame_count: 3,
            q: 5,
            search_width: 32,
            gop: 8,
        }
    }

    #[test]
    fn roundtrip_and_layout() {
        let h = sample();
        let b = h.to_bytes();
        assert_eq!(&b[..5], b"BTBD\x01");
        assert_eq!(&b[5..7], &[0, 128]);
        assert_eq!(StreamHeader::parse(&b).unwrap(), h);
    }

    #[test]
    fn rejects_bad_fields() {
        let mut b = sample().to_bytes();
        b[0] = b'X';
        assert!(StreamHeader::parse(&b).is_err());
        let mut h = sample();
        h.q = 4;
        assert!(StreamHeader::parse(&h.to_bytes()).is_err());
        let mut h = sample();
        h.padded_width = 100;
        assert!(StreamHeader::parse(&h.to_bytes()).is_err());
        assert!(StreamHeader::parse(&sample().to_bytes()[..10]).is_err());
    }
}
