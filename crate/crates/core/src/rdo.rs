//! Rate-only mode decision and quad-tree division of coding tree units.

use crate::btbd::{estimate_code_length, DataMap, MapKind};
use crate::entropy::golomb::se_len;
use crate::frame::{CuRect, DepthFrame, CTU_SIZE, MIN_CU_SIZE};
use crate::prediction::{diamond_search, intra_predict_cu, motion_compensate, MotionVector, PredictionMode, ReconFrame};
use crate::quant::QuantConfig;

/// Outcome of mode selection for one CU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuDecision {
    pub rect: CuRect,
    pub mode: PredictionMode,
    pub mv: MotionVector,
    /// Residual ranks in raster order inside the CU; empty for Skip.
    pub ranks: Vec<u32>,
    /// Estimated residual plus motion-vector bits.
    pub bits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CtuNode {
    Leaf(CuDecision),
    Split(Box<[CtuNode; 4]>),
}

impl CtuNode {
    /// Leaves in z-order.
    pub fn leaves(&self) -> Vec<&CuDecision> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a CuDecision>) {
        match self {
            CtuNode::Leaf(d) => out.push(d),
            CtuNode::Split(children) => children.iter().for_each(|c| c.collect(out)),
        }
    }
}

/// Quad-tree decisions of one CTU.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtuDecisionTree {
    pub rect: CuRect,
    pub root: CtuNode,
    /// Estimated bits: leaf bits plus one bit per split decision taken.
    pub cost: u64,
}

impl CtuDecisionTree {
    pub fn leaves(&self) -> Vec<&CuDecision> {
        self.root.leaves()
    }
}

/// Signed Exp-Golomb length summed over both components.
pub fn estimate_mv_bits(mv: MotionVector) -> u64 {
    u64::from(se_len(mv.x) + se_len(mv.y))
}

/// Estimated bits of a CU's ranks coded on their own as a residual map.
pub fn estimate_residual_bits(ranks: &[u32], size: usize, quant: QuantConfig) -> u64 {
    let bound = ranks.iter().copied().max().unwrap_or(0);
    if bound == 0 {
        return 0;
    }
    let cells: Vec<Option<u32>> = ranks.iter().map(|&r| Some(r)).collect();
    let mut map = DataMap::from_cells(MapKind::Residual, [1, size, size], bound, &cells);
    map.set_step(quant.q());
    estimate_code_length(&map, true)
}

/// Per-frame inputs shared by every CU decision.
#[derive(Clone, Copy, Debug)]
pub struct FrameContext<'a> {
    pub current: &'a DepthFrame,
    /// Reconstructed previous frame; `None` for I-frames.
    pub reference: Option<&'a DepthFrame>,
    pub quant: QuantConfig,
    pub search_width: i32,
}

struct InterCandidate {
    mode: PredictionMode,
    mv: MotionVector,
    ranks: Vec<u32>,
    recon: Vec<u8>,
    bits: u64,
}

fn inter_candidate(ctx: &FrameContext, rect: CuRect, reference: &DepthFrame, mv: MotionVector) -> InterCandidate {
    let pred = motion_compensate(reference, rect, mv);
    let cur = ctx.current.block(rect);
    let (ranks, recon): (Vec<u32>, Vec<u8>) = cur
        .iter()
        .zip(&pred)
        .map(|(&x, &p)| ctx.quant.code_sample(x, p))
        .unzip();
    let mut bits = estimate_residual_bits(&ranks, rect.size, ctx.quant);
    let mode = if mv.is_zero() {
        if ranks.iter().all(|&r| r == 0) {
            PredictionMode::Skip
        } else {
            PredictionMode::InterZ
        }
    } else {
        bits += estimate_mv_bits(mv);
        PredictionMode::InterM
    };
    InterCandidate {
        mode,
        mv,
        ranks,
        recon,
        bits,
    }
}

/// Chooses the cheapest mode for `rect` and writes its reconstruction into
/// `recon`. Ties prefer Skip, then InterZ, then InterM, then Intra.
pub fn select_cu_mode(ctx: &FrameContext, recon: &mut ReconFrame, rect: CuRect) -> CuDecision {
    let mut best: Option<InterCandidate> = None;
    if let Some(reference) = ctx.reference {
        let zero = inter_candidate(ctx, rect, reference, MotionVector::ZERO);
        let skip = zero.mode == PredictionMode::Skip;
        best = Some(zero);
        if !skip {
            let (mv, _) = diamond_search(ctx.current, rect, reference, ctx.search_width);
            if !mv.is_zero() {
                let moved = inter_candidate(ctx, rect, reference, mv);
                if moved.bits < best.as_ref().map_or(u64::MAX, |b| b.bits) {
                    best = Some(moved);
                }
            }
        }
        if let Some(b) = best.as_ref().filter(|b| b.mode == PredictionMode::Skip) {
            recon.put_block(rect, &b.recon);
            return CuDecision {
                rect,
                mode: PredictionMode::Skip,
                mv: MotionVector::ZERO,
                ranks: Vec::new(),
                bits: 0,
            };
        }
    }
    let before = best.as_ref().map(|_| recon.save(rect));
    let mut intra_ranks = Vec::with_capacity(rect.size * rect.size);
    let (current, quant) = (ctx.current, ctx.quant);
    intra_predict_cu(recon, rect, |r, c, pred| {
        let (rank, rec) = quant.code_sample(current.get(r, c), pred);
        intra_ranks.push(rank);
        rec
    });
    let intra_bits = estimate_residual_bits(&intra_ranks, rect.size, ctx.quant);
    match best {
        Some(b) if b.bits <= intra_bits => {
            recon.restore(rect, before.as_ref().expect("saved before intra trial"));
            recon.put_block(rect, &b.recon);
            CuDecision {
                rect,
                mode: b.mode,
                mv: b.mv,
                ranks: b.ranks,
                bits: b.bits,
            }
        }
        _ => CuDecision {
            rect,
            mode: PredictionMode::Intra,
            mv: MotionVector::ZERO,
            ranks: intra_ranks,
            bits: intra_bits,
        },
    }
}

fn build_node(ctx: &FrameContext, recon: &mut ReconFrame, rect: CuRect) -> (CtuNode, u64) {
    let initial = recon.save(rect);
    let undivided = select_cu_mode(ctx, recon, rect);
    let undivided_bits = undivided.bits;
    if rect.size <= MIN_CU_SIZE || undivided_bits == 0 {
        return (CtuNode::Leaf(undivided), undivided_bits);
    }
    let undivided_recon = recon.save(rect);
    recon.restore(rect, &initial);
    let mut children = Vec::with_capacity(4);
    let mut split_bits = 1u64;
    for q in rect.quadrants() {
        let (node, bits) = build_node(ctx, recon, q);
        split_bits += bits;
        children.push(node);
    }
    if split_bits < undivided_bits {
        let children: [CtuNode; 4] = children.try_into().expect("four quadrants");
        (CtuNode::Split(Box::new(children)), split_bits)
    } else {
        recon.restore(rect, &undivided_recon);
        (CtuNode::Leaf(undivided), undivided_bits)
    }
}

/// Top-down quad-tree decision for one CTU. `recon` receives the winning
/// reconstruction.
pub fn build_ctu_tree(ctx: &FrameContext, recon: &mut ReconFrame, ctu: CuRect) -> CtuDecisionTree {
    debug_assert_eq!(ctu.size, CTU_SIZE);
    let (root, cost) = build_node(ctx, recon, ctu);
    CtuDecisionTree { rect: ctu, root, cost }
}

/// Decisions of a whole frame, CTUs in raster order, with the encoder-side
/// reconstruction.
#[derive(Clone, Debug)]
pub struct FrameDecisions {
    pub trees: Vec<CtuDecisionTree>,
    pub recon: DepthFrame,
}

impl FrameDecisions {
    /// All leaf CUs in coding order.
    pub fn leaves(&self) -> Vec<&CuDecision> {
        self.trees.iter().flat_map(|t| t.leaves()).collect()
    }
}

pub fn decide_frame(ctx: &FrameContext) -> FrameDecisions {
    let (w, h) = (ctx.current.width(), ctx.current.height());
    let mut recon = ReconFrame::new(w, h);
    let mut trees = Vec::with_capacity((w / CTU_SIZE) * (h / CTU_SIZE));
    for row in (0..h).step_by(CTU_SIZE) {
        for col in (0..w).step_by(CTU_SIZE) {
            let ctu = CuRect {
                row,
                col,
                size: CTU_SIZE,
            };
            trees.push(build_ctu_tree(ctx, &mut recon, ctu));
        }
    }
    FrameDecisions {
        trees,
        recon: recon.into_frame(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn noise(w: usize, h: usize, seed: u64) -> DepthFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DepthFrame::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    fn shifted(src: &DepthFrame, dx: usize) -> DepthFrame {
        let mut out = src.clone();
        for r in 0..src.height() {
            for c in 0..src.width() {
                out.set(r, c, src.get(r, c.saturating_sub(dx)));
            }
        }
        out
    }

    fn ctx<'a>(cur: &'a DepthFrame, reference: Option<&'a DepthFrame>, q: u32) -> FrameContext<'a> {
        FrameContext {
            current: cur,
            reference,
            quant: QuantConfig::new(q).unwrap(),
            search_width: 32,
        }
    }

    #[test]
    fn mv_bit_examples() {
        assert_eq!(estimate_mv_bits(MotionVector::new(0, 0)), 2);
        assert_eq!(estimate_mv_bits(MotionVector::new(1, -1)), 6);
        assert_eq!(estimate_mv_bits(MotionVector::new(-32, 5)), 20);
    }

    #[test]
    fn identical_block_is_skip() {
        let f = noise(64, 64, 1);
        let c = ctx(&f, Some(&f), 1);
        let mut recon = ReconFrame::new(64, 64);
        let rect = CuRect::new(0, 0, 16).unwrap();
        let d = select_cu_mode(&c, &mut recon, rect);
        assert_eq!(d.mode, PredictionMode::Skip);
        assert_eq!(d.bits, 0);
        assert_eq!(recon.frame().block(rect), f.block(rect));
    }

    #[test]
    fn shifted_block_uses_motion() {
        let reference = noise(64, 64, 2);
        let cur = shifted(&reference, 2);
        let c = ctx(&cur, Some(&reference), 1);
        let mut recon = ReconFrame::new(64, 64);
        let rect = CuRect::new(16, 16, 16).unwrap();
        let d = select_cu_mode(&c, &mut recon, rect);
        assert_eq!(d.mode, PredictionMode::InterM);
        assert_eq!(d.mv, MotionVector::new(2, 0));
        assert!(d.ranks.iter().all(|&r| r == 0));
        assert_eq!(d.bits, 6 + 2 - 2);
    }

    #[test]
    fn iframe_is_intra() {
        let f = noise(64, 64, 3);
        let c = ctx(&f, None, 3);
        let mut recon = ReconFrame::new(64, 64);
        let d = select_cu_mode(&c, &mut recon, CuRect::new(0, 0, 8).unwrap());
        assert_eq!(d.mode, PredictionMode::Intra);
        let q = QuantConfig::new(3).unwrap();
        for r in 0..8 {
            for col in 0..8 {
                assert!(f.get(r, col).abs_diff(recon.frame().get(r, col)) <= q.d() as u8);
            }
        }
    }

    #[test]
    fn static_flat_ctu_is_one_skip() {
        let f = DepthFrame::filled(64, 64, 90);
        let d = decide_frame(&ctx(&f, Some(&f), 1));
        assert_eq!(d.trees.len(), 1);
        let leaves = d.leaves();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].mode, PredictionMode::Skip);
        assert_eq!(leaves[0].rect.size, 64);
    }

    /// Minimum over every quad-tree shape of the per-CU costs.
    fn all_tree_costs(rect: CuRect, cost: &HashMap<CuRect, u64>) -> Vec<u64> {
        let own = cost[&rect];
        let mut out = vec![own];
        if rect.size > MIN_CU_SIZE {
            let qs: Vec<Vec<u64>> = rect.quadrants().iter().map(|&q| all_tree_costs(q, cost)).collect();
            for a in &qs[0] {
                for b in &qs[1] {
                    for c in &qs[2] {
                        for d in &qs[3] {
                            out.push(1 + a + b + c + d);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn moving_block_is_isolated_optimally() {
        let reference = noise(64, 64, 4);
        let mut cur = reference.clone();
        for r in 40..48 {
            for c in 16..24 {
                cur.set(r, c, reference.get(r, c - 2));
            }
        }
        let c = ctx(&cur, Some(&reference), 1);
        let d = decide_frame(&c);
        let tree = &d.trees[0];
        let leaves = tree.leaves();
        assert!(leaves.len() > 1);
        for l in &leaves {
            let touches = l.rect.row < 48 && l.rect.row + l.rect.size > 40 && l.rect.col < 24 && l.rect.col + l.rect.size > 16;
            if !touches {
                assert_eq!(l.mode, PredictionMode::Skip, "{:?}", l.rect);
            }
        }
        let moving = leaves
            .iter()
            .find(|l| l.rect.row == 40 && l.rect.col == 16)
            .expect("moving block becomes its own CU");
        assert_eq!(moving.rect.size, 8);
        assert_eq!(moving.mode, PredictionMode::InterM);
        assert_eq!(moving.mv, MotionVector::new(2, 0));

        // every CU cost in isolation, then every one of the 83522 trees
        let mut cost = HashMap::new();
        let mut stack = vec![tree.rect];
        while let Some(r) = stack.pop() {
            let mut recon = ReconFrame::new(64, 64);
            cost.insert(r, select_cu_mode(&c, &mut recon, r).bits);
            if r.size > MIN_CU_SIZE {
                stack.extend(r.quadrants());
            }
        }
        let costs = all_tree_costs(tree.rect, &cost);
        assert_eq!(costs.len(), 83522);
        assert_eq!(tree.cost, *costs.iter().min().unwrap());
    }

    #[test]
    fn tree_never_worse_than_undivided() {
        for seed in 0..4 {
            let reference = noise(64, 64, 10 + seed);
            let mut cur = shifted(&reference, 1);
            for r in 0..32 {
                for col in 0..64 {
                    cur.set(r, col, reference.get(r, col));
                }
            }
            let c = ctx(&cur, Some(&reference), 3);
            let mut recon = ReconFrame::new(64, 64);
            let rect = CuRect::new(0, 0, 64).unwrap();
            let undivided = select_cu_mode(&c, &mut recon, rect).bits;
            let d = decide_frame(&c);
            assert!(d.trees[0].cost <= undivided + 1);
        }
    }

    #[test]
    fn reconstruction_respects_bound() {
        let reference = noise(128, 64, 20);
        let cur = noise(128, 64, 21);
        for q in [1, 5, 15] {
            let d = decide_frame(&ctx(&cur, Some(&reference), q));
            let bound = (q - 1) / 2;
            for (a, b) in cur.samples().iter().zip(d.recon.samples()) {
                assert!(u32::from(a.abs_diff(*b)) <= bound);
            }
            for l in d.leaves() {
                assert_eq!(l.mode == PredictionMode::Skip, l.ranks.is_empty());
                if l.mode == PredictionMode::InterM {
                    assert!(!l.mv.is_zero());
                }
            }
        }
    }
}
