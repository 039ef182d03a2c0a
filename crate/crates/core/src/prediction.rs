//! Intra (gradient-adjusted) and inter (diamond motion search) prediction.

use crate::frame::{CuRect, DepthFrame};

/// Integer-pel motion vector. A vector `(x, y)` predicts sample `(r, c)` of
/// the current frame from sample `(r - y, c - x)` of the reference, i.e. it
/// is the displacement of content from the reference to the current frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub x: i32,
    pub y: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Component `p` (0 = x, 1 = y).
    pub fn component(self, p: usize) -> i32 {
        if p == 0 {
            self.x
        } else {
            self.y
        }
    }

    /// Whether the `size`×`size` block at (`row`,`col`) displaced by this
    /// vector stays inside a `width`×`height` reference.
    pub fn block_in_bounds(self, row: usize, col: usize, size: usize, width: usize, height: usize) -> bool {
        let r = row as i64 - i64::from(self.y);
        let c = col as i64 - i64::from(self.x);
        r >= 0 && c >= 0 && r + size as i64 <= height as i64 && c + size as i64 <= width as i64
    }
}

/// CU prediction mode; the discriminant is the code word in the mode map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PredictionMode {
    Intra = 0,
    Skip = 1,
    InterZ = 2,
    InterM = 3,
}

impl PredictionMode {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Intra),
            1 => Some(Self::Skip),
            2 => Some(Self::InterZ),
            3 => Some(Self::InterM),
            _ => None,
        }
    }
}

/// Signed residual of one CU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualBlock {
    pub rect: CuRect,
    pub values: Vec<i16>,
}

/// Frame under reconstruction together with the set of samples already
/// reconstructed. Only reconstructed samples are visible to intra prediction.
#[derive(Clone, Debug)]
pub struct ReconFrame {
    frame: DepthFrame,
    coded: Vec<bool>,
}

impl ReconFrame {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            frame: DepthFrame::filled(width, height, 0),
            coded: vec![false; width * height],
        }
    }

    pub fn frame(&self) -> &DepthFrame {
        &self.frame
    }

    pub fn into_frame(self) -> DepthFrame {
        self.frame
    }

    pub fn width(&self) -> usize {
        self.frame.width()
    }

    pub fn height(&self) -> usize {
        self.frame.height()
    }

    /// Reconstructed sample at a signed position, `None` when outside the
    /// frame or not yet reconstructed.
    #[inline]
    pub fn available(&self, row: isize, col: isize) -> Option<u8> {
        if row < 0 || col < 0 || row as usize >= self.height() || col as usize >= self.width() {
            return None;
        }
        let i = row as usize * self.width() + col as usize;
        self.coded[i].then(|| self.frame.samples()[i])
    }

    #[inline]
    pub fn put(&mut self, row: usize, col: usize, v: u8) {
        let i = row * self.width() + col;
        self.frame.samples_mut()[i] = v;
        self.coded[i] = true;
    }

    pub fn is_coded(&self, row: usize, col: usize) -> bool {
        self.coded[row * self.width() + col]
    }

    /// Snapshot of a block's samples and coded flags.
    pub fn save(&self, rect: CuRect) -> (Vec<u8>, Vec<bool>) {
        let mut s = Vec::with_capacity(rect.size * rect.size);
        let mut m = Vec::with_capacity(rect.size * rect.size);
        for r in rect.row..rect.row + rect.size {
            let base = r * self.width() + rect.col;
            s.extend_from_slice(&self.frame.samples()[base..base + rect.size]);
            m.extend_from_slice(&self.coded[base..base + rect.size]);
        }
        (s, m)
    }

    pub fn restore(&mut self, rect: CuRect, snapshot: &(Vec<u8>, Vec<bool>)) {
        let w = self.width();
        for (i, r) in (rect.row..rect.row + rect.size).enumerate() {
            let base = r * w + rect.col;
            self.frame.samples_mut()[base..base + rect.size]
                .copy_from_slice(&snapshot.0[i * rect.size..(i + 1) * rect.size]);
            self.coded[base..base + rect.size].copy_from_slice(&snapshot.1[i * rect.size..(i + 1) * rect.size]);
        }
    }

    /// Writes a fully reconstructed block.
    pub fn put_block(&mut self, rect: CuRect, values: &[u8]) {
        for r in 0..rect.size {
            for c in 0..rect.size {
                self.put(rect.row + r, rect.col + c, values[r * rect.size + c]);
            }
        }
    }
}

/// Causal neighbourhood of a pixel after boundary substitution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapNeighbors {
    pub w: u8,
    pub n: u8,
    pub nw: u8,
    pub ne: u8,
    pub ww: u8,
    pub nn: u8,
    pub nne: u8,
}

/// Prediction used when neither the left nor the upper neighbour exists.
pub const GAP_FALLBACK: u8 = 128;

/// Gathers the seven GAP neighbours. A missing neighbour takes the value of
/// its nearest available causal neighbour (W↔N, NW/NE→N, WW→W, NN→N,
/// NNE→NE); `None` when both W and N are missing.
pub fn gap_neighbors(recon: &ReconFrame, row: usize, col: usize) -> Option<GapNeighbors> {
    let (r, c) = (row as isize, col as isize);
    let w0 = recon.available(r, c - 1);
    let n0 = recon.available(r - 1, c);
    let (w, n) = match (w0, n0) {
        (None, None) => return None,
        (Some(w), None) => (w, w),
        (None, Some(n)) => (n, n),
        (Some(w), Some(n)) => (w, n),
    };
    let nw = recon.available(r - 1, c - 1).unwrap_or(n);
    let ne = recon.available(r - 1, c + 1).unwrap_or(n);
    let ww = recon.available(r, c - 2).unwrap_or(w);
    let nn = recon.available(r - 2, c).unwrap_or(n);
    let nne = recon.available(r - 2, c + 1).unwrap_or(ne);
    Some(GapNeighbors {
        w,
        n,
        nw,
        ne,
        ww,
        nn,
        nne,
    })
}

/// CALIC gradient-adjusted prediction from a resolved neighbourhood.
pub fn gap_from_neighbors(nb: GapNeighbors) -> u8 {
    let [w, n, nw, ne, ww, nn, nne] = [nb.w, nb.n, nb.nw, nb.ne, nb.ww, nb.nn, nb.nne].map(i32::from);
    let dh = (w - ww).abs() + (n - nw).abs() + (ne - n).abs();
    let dv = (w - nw).abs() + (n - nn).abs() + (ne - nne).abs();
    let diff = dv - dh;
    if diff > 80 {
        return w as u8;
    }
    if diff < -80 {
        return n as u8;
    }
    // value / scale, scale a power of two
    let base4 = 2 * (w + n) + (ne - nw);
    let (v, scale) = if diff > 32 {
        (base4 + 4 * w, 8)
    } else if diff > 8 {
        (3 * base4 + 4 * w, 16)
    } else if diff < -32 {
        (base4 + 4 * n, 8)
    } else if diff < -8 {
        (3 * base4 + 4 * n, 16)
    } else {
        (base4, 4)
    };
    (v + scale / 2).div_euclid(scale).clamp(0, 255) as u8
}

/// GAP prediction of (`row`, `col`) from already reconstructed samples.
pub fn gap_predict(recon: &ReconFrame, row: usize, col: usize) -> u8 {
    gap_neighbors(recon, row, col).map_or(GAP_FALLBACK, gap_from_neighbors)
}

/// Predicts every pixel of `rect` in raster order. `reconstruct` maps each
/// (row, col, prediction) to the reconstructed sample, which is stored before
/// the next pixel is predicted. Returns the per-pixel predictions.
pub fn intra_predict_cu(
    recon: &mut ReconFrame,
    rect: CuRect,
    mut reconstruct: impl FnMut(usize, usize, u8) -> u8,
) -> Vec<u8> {
    let mut preds = Vec::with_capacity(rect.size * rect.size);
    for r in rect.row..rect.row + rect.size {
        for c in rect.col..rect.col + rect.size {
            let p = gap_predict(recon, r, c);
            preds.push(p);
            let v = reconstruct(r, c, p);
            recon.put(r, c, v);
        }
    }
    preds
}

/// Motion-compensated block. The vector must keep the block in bounds.
pub fn motion_compensate(reference: &DepthFrame, rect: CuRect, mv: MotionVector) -> Vec<u8> {
    let r0 = (rect.row as i64 - i64::from(mv.y)) as usize;
    let c0 = (rect.col as i64 - i64::from(mv.x)) as usize;
    reference.block(CuRect {
        row: r0,
        col: c0,
        size: rect.size,
    })
}

/// Sum of absolute differences between the current block and its
/// motion-compensated prediction.
pub fn sad(current: &DepthFrame, rect: CuRect, reference: &DepthFrame, mv: MotionVector) -> u32 {
    let r0 = (rect.row as i64 - i64::from(mv.y)) as usize;
    let c0 = (rect.col as i64 - i64::from(mv.x)) as usize;
    let (cw, rw) = (current.width(), reference.width());
    let (cs, rs) = (current.samples(), reference.samples());
    let mut total = 0u32;
    for i in 0..rect.size {
        let a = &cs[(rect.row + i) * cw + rect.col..][..rect.size];
        let b = &rs[(r0 + i) * rw + c0..][..rect.size];
        total += a
            .iter()
            .zip(b)
            .map(|(&x, &y)| u32::from(x.abs_diff(y)))
            .sum::<u32>();
    }
    total
}

const LARGE_DIAMOND: [(i32, i32); 8] = [(0, -2), (-1, -1), (1, -1), (-2, 0), (2, 0), (-1, 1), (1, 1), (0, 2)];
const SMALL_DIAMOND: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// Ordering key: SAD, then |x|+|y|, then y, then x.
fn search_key(sad: u32, mv: MotionVector) -> (u32, i32, i32, i32) {
    (sad, mv.x.abs() + mv.y.abs(), mv.y, mv.x)
}

/// Large-then-small diamond search centred at the zero vector.
pub fn diamond_search(
    current: &DepthFrame,
    rect: CuRect,
    reference: &DepthFrame,
    search_width: i32,
) -> (MotionVector, u32) {
    let (w, h) = (reference.width(), reference.height());
    let valid = |mv: MotionVector| {
        mv.x.abs() <= search_width && mv.y.abs() <= search_width && mv.block_in_bounds(rect.row, rect.col, rect.size, w, h)
    };
    let mut best = MotionVector::ZERO;
    let mut best_sad = sad(current, rect, reference, best);
    let probe = |center: MotionVector, pattern: &[(i32, i32)], best: &mut MotionVector, best_sad: &mut u32| {
        let mut moved = false;
        for &(dx, dy) in pattern {
            let cand = MotionVector::new(center.x + dx, center.y + dy);
            if !valid(cand) {
                continue;
            }
            let s = sad(current, rect, reference, cand);
            if search_key(s, cand) < search_key(*best_sad, *best) {
                *best = cand;
                *best_sad = s;
                moved = true;
            }
        }
        moved
    };
    // every move strictly decreases the key, so the walk terminates
    loop {
        let center = best;
        if !probe(center, &LARGE_DIAMOND, &mut best, &mut best_sad) {
            break;
        }
    }
    let center = best;
    probe(center, &SMALL_DIAMOND, &mut best, &mut best_sad);
    (best, best_sad)
}

/// Element-wise `current - prediction` over `rect`.
pub fn compute_residual(current: &DepthFrame, rect: CuRect, prediction: &[u8]) -> ResidualBlock {
    assert_eq!(prediction.len(), rect.size * rect.size);
    let values = current
        .block(rect)
        .iter()
        .zip(prediction)
        .map(|(&x, &p)| i16::from(x) - i16::from(p))
        .collect();
    ResidualBlock { rect, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gap_reference(nb: GapNeighbors) -> u8 {
        // direct transcription of the GAP ladder in real arithmetic
        let (w, n, nw, ne, ww, nn, nne) = (
            nb.w as f64, nb.n as f64, nb.nw as f64, nb.ne as f64, nb.ww as f64, nb.nn as f64, nb.nne as f64,
        );
        let dh = (w - ww).abs() + (n - nw).abs() + (ne - n).abs();
        let dv = (w - nw).abs() + (n - nn).abs() + (ne - nne).abs();
        let x = if dv - dh > 80.0 {
            w
        } else if dh - dv > 80.0 {
            n
        } else {
            let mut x = (w + n) / 2.0 + (ne - nw) / 4.0;
            if dv - dh > 32.0 {
                x = (x + w) / 2.0;
            } else if dv - dh > 8.0 {
                x = (3.0 * x + w) / 4.0;
            } else if dh - dv > 32.0 {
                x = (x + n) / 2.0;
            } else if dh - dv > 8.0 {
                x = (3.0 * x + n) / 4.0;
            }
            x
        };
        (x + 0.5).floor().clamp(0.0, 255.0) as u8
    }

    #[test]
    fn gap_matches_reference_ladder() {
        let nb = GapNeighbors { w: 50, n: 100, nw: 100, ne: 100, ww: 50, nn: 100, nne: 100 };
        assert_eq!(gap_from_neighbors(nb), gap_reference(nb));
        assert_eq!(gap_from_neighbors(nb), 63);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200_000 {
            let v: [u8; 7] = rng.gen();
            let nb = GapNeighbors { w: v[0], n: v[1], nw: v[2], ne: v[3], ww: v[4], nn: v[5], nne: v[6] };
            assert_eq!(gap_from_neighbors(nb), gap_reference(nb), "{nb:?}");
        }
    }

    #[test]
    fn gap_constant_and_first_pixel() {
        let mut rf = ReconFrame::new(64, 64);
        assert_eq!(gap_predict(&rf, 0, 0), 128);
        for r in 0..4 {
            for c in 0..64 {
                rf.put(r, c, 100);
            }
        }
        rf.put(4, 0, 100);
        rf.put(4, 1, 100);
        assert_eq!(gap_predict(&rf, 4, 2), 100);
        assert_eq!(gap_predict(&rf, 4, 63), 100);
    }

    #[test]
    fn gap_ignores_unreconstructed_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rf = ReconFrame::new(64, 64);
        let order: Vec<(usize, usize)> = (0..64).flat_map(|r| (0..64).map(move |c| (r, c))).collect();
        let cut = 64 * 20 + 17;
        for &(r, c) in &order[..cut] {
            rf.put(r, c, rng.gen());
        }
        let (r, c) = order[cut];
        let expect = gap_predict(&rf, r, c);
        for _ in 0..20 {
            let mut masked = rf.clone();
            for &(rr, cc) in &order[cut..] {
                masked.frame.set(rr, cc, rng.gen());
            }
            assert_eq!(gap_predict(&masked, r, c), expect);
        }
    }

    #[test]
    fn intra_constant_frame_has_zero_residual() {
        let cur = DepthFrame::filled(64, 64, 77);
        let mut rf = ReconFrame::new(64, 64);
        for r in 0..8 {
            for c in 0..64 {
                rf.put(r, c, 77);
            }
        }
        let rect = CuRect::new(8, 0, 8).unwrap();
        let pred = intra_predict_cu(&mut rf, rect, |r, c, _| cur.get(r, c));
        let res = compute_residual(&cur, rect, &pred);
        assert!(res.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn intra_top_left_cu_simulation() {
        // every pixel reconstructed exactly; first prediction is the fallback
        let cur = DepthFrame::new(64, 64, (0..64 * 64).map(|i| (i % 64 + i / 64) as u8).collect()).unwrap();
        let mut rf = ReconFrame::new(64, 64);
        let rect = CuRect::new(0, 0, 8).unwrap();
        let pred = intra_predict_cu(&mut rf, rect, |r, c, _| cur.get(r, c));
        assert_eq!(pred[0], 128);
        // first row only has a left neighbour: W = N = ... → predicts W
        for c in 1..8 {
            assert_eq!(pred[c], cur.get(0, c - 1));
        }
        // first column only has N
        for r in 1..8 {
            assert_eq!(pred[r * 8], cur.get(r - 1, 0));
        }
    }

    #[test]
    fn intra_vertical_edge_follows_edge() {
        // left half 20, right half 200: horizontal gradient dominates → predict N
        let cur = DepthFrame::new(64, 64, (0..64 * 64).map(|i| if i % 64 < 4 { 20 } else { 200 }).collect()).unwrap();
        let mut rf = ReconFrame::new(64, 64);
        for r in 0..8 {
            for c in 0..64 {
                rf.put(r, c, cur.get(r, c));
            }
        }
        let rect = CuRect::new(8, 0, 8).unwrap();
        let pred = intra_predict_cu(&mut rf, rect, |r, c, _| cur.get(r, c));
        let res = compute_residual(&cur, rect, &pred);
        // away from the first column every pixel is predicted exactly
        for r in 0..8 {
            for c in 2..8 {
                assert_eq!(res.values[r * 8 + c], 0, "r={r} c={c}");
            }
        }
    }

    fn full_search(cur: &DepthFrame, rect: CuRect, reference: &DepthFrame, w: i32) -> (MotionVector, u32) {
        let mut best = (MotionVector::ZERO, sad(cur, rect, reference, MotionVector::ZERO));
        for y in -w..=w {
            for x in -w..=w {
                let mv = MotionVector::new(x, y);
                if !mv.block_in_bounds(rect.row, rect.col, rect.size, reference.width(), reference.height()) {
                    continue;
                }
                let s = sad(cur, rect, reference, mv);
                if search_key(s, mv) < search_key(best.1, best.0) {
                    best = (mv, s);
                }
            }
        }
        best
    }

    fn textured(seed: u64) -> DepthFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DepthFrame::new(128, 128, (0..128 * 128).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn diamond_finds_constructed_shift() {
        let reference = textured(5);
        let mut cur = DepthFrame::filled(128, 128, 0);
        for r in 0..128 {
            for c in 0..128 {
                cur.set(r, c, reference.get(r, c.saturating_sub(2)));
            }
        }
        for rect in [CuRect::new(32, 32, 16).unwrap(), CuRect::new(64, 64, 32).unwrap(), CuRect::new(8, 40, 8).unwrap()] {
            let (mv, s) = diamond_search(&cur, rect, &reference, 32);
            assert_eq!((mv, s), (MotionVector::new(2, 0), 0));
            assert_eq!(full_search(&cur, rect, &reference, 32), (mv, s));
        }
    }

    #[test]
    fn diamond_identical_and_unrelated() {
        let a = textured(1);
        let rect = CuRect::new(64, 0, 64).unwrap();
        assert_eq!(diamond_search(&a, rect, &a, 32), (MotionVector::ZERO, 0));
        let b = textured(2);
        for rect in [CuRect::new(0, 0, 64).unwrap(), CuRect::new(64, 64, 8).unwrap()] {
            let (mv, s) = diamond_search(&a, rect, &b, 32);
            assert!(s <= sad(&a, rect, &b, MotionVector::ZERO));
            assert!(mv.x.abs() <= 32 && mv.y.abs() <= 32);
        }
    }

    #[test]
    fn residual_examples() {
        let rect = CuRect::new(0, 0, 8).unwrap();
        let cur = DepthFrame::filled(64, 64, 255);
        assert!(compute_residual(&cur, rect, &[0; 64]).values.iter().all(|&v| v == 255));
        assert!(compute_residual(&cur, rect, &[255; 64]).values.iter().all(|&v| v == 0));
        let cur = DepthFrame::filled(64, 64, 10);
        assert!(compute_residual(&cur, rect, &[17; 64]).values.iter().all(|&v| v == -7));
    }
}
