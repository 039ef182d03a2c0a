//! Order-0 Exp-Golomb codes: unsigned, signed, and the sign-majority
//! modified variant used for non-zero motion-vector components.

use super::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};

/// Length in bits of the order-0 code of `n`.
#[inline]
pub fn ue_len(n: u32) -> u32 {
    2 * (32 - (n + 1).leading_zeros() - 1) + 1
}

pub fn write_ue(w: &mut BitWriter, n: u32) {
    let v = u64::from(n) + 1;
    let bits = 64 - v.leading_zeros();
    w.write_bits(0, bits - 1);
    w.write_bits(v, bits);
}

pub fn read_ue(r: &mut BitReader) -> Result<u32> {
    let mut zeros = 0u32;
    while !r.read_bit()? {
        zeros += 1;
        if zeros > 31 {
            return Err(r.error("Exp-Golomb prefix too long"));
        }
    }
    let rest = r.read_bits(zeros)?;
    let v = (1u64 << zeros) | rest;
    u32::try_from(v - 1).map_err(|_| r.error("Exp-Golomb value overflow"))
}

/// `v > 0 → 2v−1`, `v ≤ 0 → −2v`.
#[inline]
pub fn signed_to_code_num(v: i32) -> u32 {
    if v > 0 {
        (2 * v - 1) as u32
    } else {
        (-2 * v) as u32
    }
}

#[inline]
pub fn code_num_to_signed(k: u32) -> i32 {
    if k % 2 == 1 {
        k.div_ceil(2) as i32
    } else {
        -((k / 2) as i32)
    }
}

/// Length of the signed code, `2⌈log2(|v|+1)⌉+1`.
#[inline]
pub fn se_len(v: i32) -> u32 {
    ue_len(signed_to_code_num(v))
}

pub fn write_se(w: &mut BitWriter, v: i32) {
    write_ue(w, signed_to_code_num(v));
}

pub fn read_se(r: &mut BitReader) -> Result<i32> {
    read_ue(r).map(code_num_to_signed)
}

/// Which sign occurs more often among a frame's non-zero values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MajoritySign {
    Positive,
    Negative,
}

impl MajoritySign {
    /// Majority of `values`; ties go to positive.
    pub fn of(values: &[i32]) -> Self {
        let pos = values.iter().filter(|&&v| v > 0).count();
        if pos * 2 >= values.len() {
            Self::Positive
        } else {
            Self::Negative
        }
    }

    fn shift_in(self, v: i32) -> i32 {
        match self {
            Self::Positive if v > 0 => v - 1,
            Self::Negative if v < 0 => v + 1,
            _ => v,
        }
    }

    fn shift_out(self, w: i32) -> i32 {
        match self {
            Self::Positive if w >= 0 => w + 1,
            Self::Negative if w <= 0 => w - 1,
            _ => w,
        }
    }
}

/// Value whose signed code represents non-zero `v` under the majority rule.
pub fn modified_code_value(v: i32, majority: MajoritySign) -> i32 {
    majority.shift_in(v)
}

/// Writes the 1-bit majority flag followed by the modified codes.
pub fn write_modified(w: &mut BitWriter, values: &[i32], majority: MajoritySign) -> Result<()> {
    if values.contains(&0) {
        return Err(Error::input("modified Exp-Golomb values must be non-zero"));
    }
    w.write_bit(majority == MajoritySign::Negative);
    for &v in values {
        write_se(w, majority.shift_in(v));
    }
    Ok(())
}

pub fn read_modified(r: &mut BitReader, count: usize) -> Result<Vec<i32>> {
    let majority = if r.read_bit()? {
        MajoritySign::Negative
    } else {
        MajoritySign::Positive
    };
    (0..count)
        .map(|_| read_se(r).map(|w| majority.shift_out(w)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se_bits(v: i32) -> String {
        let mut w = BitWriter::new();
        write_se(&mut w, v);
        w.to_bit_string()
    }

    #[test]
    fn signed_code_examples() {
        assert_eq!(se_bits(0), "1");
        assert_eq!(se_bits(1), "010");
        assert_eq!(se_bits(-1), "011");
        assert_eq!(se_bits(2), "00100");
    }

    #[test]
    fn signed_length_matches_closed_form() {
        for v in -64i32..=64 {
            let closed = 2 * ((v.unsigned_abs() + 1) as f64).log2().ceil() as u32 + 1;
            assert_eq!(se_len(v), closed, "v={v}");
            assert_eq!(se_bits(v).len() as u32, closed);
        }
    }

    #[test]
    fn modified_examples() {
        let mut w = BitWriter::new();
        write_modified(&mut w, &[1, 2, -1], MajoritySign::Positive).unwrap();
        assert_eq!(w.to_bit_string(), "0".to_string() + "1" + "010" + "011");
        let mut w = BitWriter::new();
        write_modified(&mut w, &[-1], MajoritySign::Negative).unwrap();
        assert_eq!(w.to_bit_string(), "11");
        assert!(write_modified(&mut BitWriter::new(), &[3, 0], MajoritySign::Positive).is_err());
    }

    #[test]
    fn ue_rejects_runaway_prefix() {
        let data = [0u8; 8];
        assert!(read_ue(&mut BitReader::new(&data)).is_err());
    }
}
