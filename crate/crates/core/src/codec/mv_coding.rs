//! Coding of the non-zero motion-vector components of a frame.
//!
//! Components are visited CU by CU (anchors in raster order), x before y.
//! Each is predicted from the left, above and above-right InterM
//! neighbours already coded. Four modes are tried and the shortest kept.

use crate::entropy::golomb::{read_modified, read_se, write_modified, write_se, MajoritySign};
use crate::entropy::{AdaptiveModel, BitReader, BitWriter, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::frame::{CuRect, MIN_CU_SIZE};
use crate::prediction::MotionVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MvCodingMode {
    /// Signed Exp-Golomb of prediction differences.
    PredictedGolomb,
    /// Arithmetic-coded prediction differences.
    PredictedArithmetic,
    /// Sign-majority Exp-Golomb of raw components.
    RawGolomb,
    /// Arithmetic-coded raw components.
    RawArithmetic,
}

impl MvCodingMode {
    pub const ALL: [MvCodingMode; 4] = [
        MvCodingMode::PredictedGolomb,
        MvCodingMode::PredictedArithmetic,
        MvCodingMode::RawGolomb,
        MvCodingMode::RawArithmetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::PredictedGolomb => "predicted-golomb",
            Self::PredictedArithmetic => "predicted-arithmetic",
            Self::RawGolomb => "raw-golomb",
            Self::RawArithmetic => "raw-arithmetic",
        }
    }
}

pub const MV_MODE_BITS: u32 = 2;

/// An InterM CU as the motion coder sees it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MotionCu {
    pub rect: CuRect,
    /// Which components (x, y) are non-zero.
    pub nonzero: [bool; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvCodingReport {
    pub mode: MvCodingMode,
    pub bits: usize,
    pub components: usize,
    pub candidates: Vec<(MvCodingMode, usize)>,
}

fn ceil_log2(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

/// Grid of already-coded InterM vectors on the 8×8 cell lattice.
struct MotionGrid {
    cols: usize,
    cells: Vec<Option<MotionVector>>,
}

impl MotionGrid {
    fn new(width: usize, height: usize) -> Self {
        let cols = width / MIN_CU_SIZE;
        Self {
            cols,
            cells: vec![None; cols * (height / MIN_CU_SIZE)],
        }
    }

    fn at(&self, r: isize, c: isize) -> Option<MotionVector> {
        if r < 0 || c < 0 || c as usize >= self.cols {
            return None;
        }
        self.cells.get(r as usize * self.cols + c as usize).copied().flatten()
    }

    fn predict(&self, rect: CuRect) -> MotionVector {
        let r = (rect.row / MIN_CU_SIZE) as isize;
        let c = (rect.col / MIN_CU_SIZE) as isize;
        let s = (rect.size / MIN_CU_SIZE) as isize;
        let nbrs: Vec<MotionVector> = [self.at(r, c - 1), self.at(r - 1, c), self.at(r - 1, c + s)]
            .into_iter()
            .flatten()
            .collect();
        let pick = |f: fn(MotionVector) -> i32| -> i32 {
            let mut v: Vec<i32> = nbrs.iter().map(|&m| f(m)).collect();
            v.sort_unstable();
            match v.len() {
                3 => v[1],
                2 => (v[0] + v[1]).div_euclid(2),
                1 => v[0],
                _ => 0,
            }
        };
        MotionVector::new(pick(|m| m.x), pick(|m| m.y))
    }

    fn store(&mut self, rect: CuRect, mv: MotionVector) {
        let (r0, c0, s) = (rect.row / MIN_CU_SIZE, rect.col / MIN_CU_SIZE, rect.size / MIN_CU_SIZE);
        for r in r0..r0 + s {
            for c in c0..c0 + s {
                self.cells[r * self.cols + c] = Some(mv);
            }
        }
    }
}

/// Non-zero components and their prediction differences in coding order.
pub fn components(cus: &[(CuRect, MotionVector)], width: usize, height: usize) -> (Vec<i32>, Vec<i32>) {
    let mut grid = MotionGrid::new(width, height);
    let (mut values, mut diffs) = (Vec::new(), Vec::new());
    for &(rect, mv) in cus {
        let pred = grid.predict(rect);
        for p in 0..2 {
            let v = mv.component(p);
            if v != 0 {
                values.push(v);
                diffs.push(v - pred.component(p));
            }
        }
        grid.store(rect, mv);
    }
    (values, diffs)
}

fn encode_with_mode(w: &mut BitWriter, mode: MvCodingMode, values: &[i32], diffs: &[i32], search_width: u32) {
    w.write_bits(mode as u64, MV_MODE_BITS);
    match mode {
        MvCodingMode::PredictedGolomb => diffs.iter().for_each(|&d| write_se(w, d)),
        MvCodingMode::PredictedArithmetic => {
            let m = diffs.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0).max(1);
            w.write_bits(u64::from(m - 1), ceil_log2(2 * search_width));
            let mut model = AdaptiveModel::new(2 * m as usize + 1);
            let mut enc = RangeEncoder::new(w);
            for &d in diffs {
                enc.encode(&mut model, (d + m as i32) as usize);
            }
            enc.finish();
        }
        MvCodingMode::RawGolomb => {
            write_modified(w, values, MajoritySign::of(values)).expect("components are non-zero");
        }
        MvCodingMode::RawArithmetic => {
            let m = values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(1).max(1);
            w.write_bits(u64::from(m - 1), ceil_log2(search_width));
            let mut model = AdaptiveModel::new(2 * m as usize);
            let mut enc = RangeEncoder::new(w);
            for &v in values {
                let s = if v < 0 { v + m as i32 } else { v + m as i32 - 1 };
                enc.encode(&mut model, s as usize);
            }
            enc.finish();
        }
    }
}

/// Encodes the vectors of a frame's InterM CUs, listed in coding order.
pub fn encode_mvs(w: &mut BitWriter, cus: &[(CuRect, MotionVector)], width: usize, height: usize, search_width: u32) -> MvCodingReport {
    let (values, diffs) = components(cus, width, height);
    let mut best: Option<(MvCodingMode, BitWriter)> = None;
    let mut candidates = Vec::with_capacity(4);
    for mode in MvCodingMode::ALL {
        let mut scratch = BitWriter::new();
        encode_with_mode(&mut scratch, mode, &values, &diffs, search_width);
        candidates.push((mode, scratch.len()));
        if best.as_ref().is_none_or(|(_, b)| scratch.len() < b.len()) {
            best = Some((mode, scratch));
        }
    }
    let (mode, payload) = best.expect("four modes");
    w.append(&payload);
    MvCodingReport {
        mode,
        bits: payload.len(),
        components: values.len(),
        candidates,
    }
}

/// Decodes the vectors of `cus`, rejecting components that are zero or
/// exceed ±`search_width`.
pub fn decode_mvs(r: &mut BitReader, cus: &[MotionCu], width: usize, height: usize, search_width: u32) -> Result<Vec<MotionVector>> {
    let count: usize = cus.iter().map(|c| c.nonzero.iter().filter(|&&n| n).count()).sum();
    let mode = MvCodingMode::ALL[r.read_bits(MV_MODE_BITS)? as usize];
    let omega = search_width as i32;
    match mode {
        MvCodingMode::PredictedGolomb => {
            let at = r.position();
            rebuild_predicted(cus, width, height, omega, at, || read_se(r))
        }
        MvCodingMode::PredictedArithmetic => {
            let m = r.read_bits(ceil_log2(2 * search_width))? as i32 + 1;
            if m > 2 * omega {
                return Err(r.error("difference range exceeds search window"));
            }
            let at = r.position();
            let mut model = AdaptiveModel::new(2 * m as usize + 1);
            let mut dec = RangeDecoder::new(r)?;
            let out = rebuild_predicted(cus, width, height, omega, at, || Ok(dec.decode(&mut model)? as i32 - m))?;
            dec.finish();
            Ok(out)
        }
        MvCodingMode::RawGolomb | MvCodingMode::RawArithmetic => {
            let values = if mode == MvCodingMode::RawGolomb {
                read_modified(r, count)?
            } else {
                let m = r.read_bits(ceil_log2(search_width))? as i32 + 1;
                let mut model = AdaptiveModel::new(2 * m as usize);
                let mut dec = RangeDecoder::new(r)?;
                let mut v = Vec::with_capacity(count);
                for _ in 0..count {
                    let s = dec.decode(&mut model)? as i32;
                    v.push(if s < m { s - m } else { s - m + 1 });
                }
                dec.finish();
                v
            };
            let mut it = values.into_iter();
            let mut out = Vec::with_capacity(cus.len());
            for cu in cus {
                let mut comp = [0i32; 2];
                for p in 0..2 {
                    if cu.nonzero[p] {
                        comp[p] = check_component(it.next().unwrap_or(0), omega, r.position())?;
                    }
                }
                out.push(MotionVector::new(comp[0], comp[1]));
            }
            Ok(out)
        }
    }
}

fn check_component(v: i32, omega: i32, at: usize) -> Result<i32> {
    if v == 0 || v.abs() > omega {
        Err(Error::decode(at, format!("motion component {v} zero or outside ±{omega}")))
    } else {
        Ok(v)
    }
}

fn rebuild_predicted(
    cus: &[MotionCu],
    width: usize,
    height: usize,
    omega: i32,
    at: usize,
    mut next_diff: impl FnMut() -> Result<i32>,
) -> Result<Vec<MotionVector>> {
    let mut grid = MotionGrid::new(width, height);
    let mut out = Vec::with_capacity(cus.len());
    for cu in cus {
        let pred = grid.predict(cu.rect);
        let mut comp = [0i32; 2];
        for p in 0..2 {
            if cu.nonzero[p] {
                let v = pred.component(p).saturating_add(next_diff()?);
                comp[p] = check_component(v, omega, at)?;
            }
        }
        let mv = MotionVector::new(comp[0], comp[1]);
        grid.store(cu.rect, mv);
        out.push(mv);
    }
    Ok(out)
}
