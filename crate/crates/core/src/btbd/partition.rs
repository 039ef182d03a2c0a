//! Greedy binary-tree decomposition of a data map into cuboid leaves.

use super::estimate::{ceil_bits, Estimator};
use super::map::{DataMap, Region, RegionContent};
use crate::entropy::tree_code::code_len;
use crate::entropy::{MapClass, NodeKind};

/// Split axis. Declaration order is the tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    P,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::P];

    /// Index into `[p, y, x]` coordinates.
    pub fn dim(self) -> usize {
        match self {
            Axis::P => 0,
            Axis::Y => 1,
            Axis::X => 2,
        }
    }

    pub fn node_kind(self) -> NodeKind {
        match self {
            Axis::X => NodeKind::SplitX,
            Axis::Y => NodeKind::SplitY,
            Axis::P => NodeKind::SplitP,
        }
    }

    pub fn from_node_kind(kind: NodeKind) -> Option<Axis> {
        match kind {
            NodeKind::SplitX => Some(Axis::X),
            NodeKind::SplitY => Some(Axis::Y),
            NodeKind::SplitP => Some(Axis::P),
            _ => None,
        }
    }
}

/// Leaf content type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leaf {
    Zero,
    Same(u32),
    Mixed,
}

impl Leaf {
    pub fn node_kind(self) -> NodeKind {
        match self {
            Leaf::Zero => NodeKind::LeafZero,
            Leaf::Same(_) => NodeKind::LeafSame,
            Leaf::Mixed => NodeKind::LeafMixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionTree {
    Leaf {
        region: Region,
        leaf: Leaf,
    },
    Split {
        region: Region,
        axis: Axis,
        /// Cells in the first child along `axis`.
        pos: usize,
        first: Box<PartitionTree>,
        second: Box<PartitionTree>,
    },
}

impl PartitionTree {
    pub fn region(&self) -> &Region {
        match self {
            PartitionTree::Leaf { region, .. } | PartitionTree::Split { region, .. } => region,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PartitionTree::Leaf { .. } => 1,
            PartitionTree::Split { first, second, .. } => first.leaf_count() + second.leaf_count(),
        }
    }

    pub fn split_count(&self) -> usize {
        match self {
            PartitionTree::Leaf { .. } => 0,
            PartitionTree::Split { first, second, .. } => 1 + first.split_count() + second.split_count(),
        }
    }

    /// Leaves in pre-order.
    pub fn leaves(&self) -> Vec<(Region, Leaf)> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let PartitionTree::Leaf { region, leaf } = t {
                out.push((*region, *leaf));
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'t>(&'t self, f: &mut impl FnMut(&'t PartitionTree)) {
        f(self);
        if let PartitionTree::Split { first, second, .. } = self {
            first.visit(f);
            second.visit(f);
        }
    }

    pub fn has_split_on(&self, axis: Axis) -> bool {
        let mut found = false;
        self.visit(&mut |t| {
            if let PartitionTree::Split { axis: a, .. } = t {
                found |= *a == axis;
            }
        });
        found
    }
}

/// Fixed-length width of a bitmap split position along an extent.
pub fn position_bits(extent: usize) -> u32 {
    if extent <= 2 {
        0
    } else {
        usize::BITS - (extent - 2).leading_zeros()
    }
}

/// The only split position considered for intmaps.
pub fn halfway(extent: usize) -> usize {
    (extent - 1).div_ceil(2)
}

/// Bits to signal a split: axis code plus, for bitmaps, the position.
pub fn split_cost(class: MapClass, axis: Axis, extent: usize) -> u64 {
    let axis_bits = code_len(axis.node_kind(), class).expect("axis has a code for this class");
    let pos_bits = match class {
        MapClass::Bitmap => position_bits(extent),
        MapClass::Intmap => 0,
    };
    u64::from(axis_bits + pos_bits)
}

/// A candidate split with flat estimates of both halves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitChoice {
    pub axis: Axis,
    pub pos: usize,
    pub first_bits: u64,
    pub second_bits: u64,
    pub split_bits: u64,
    /// Unrounded child estimates, used to order equal whole-bit totals.
    pub raw_bits: f64,
}

impl SplitChoice {
    pub fn total(&self) -> u64 {
        self.first_bits + self.second_bits + self.split_bits
    }

    fn better_than(&self, other: &SplitChoice) -> bool {
        self.total() < other.total() || (self.total() == other.total() && self.raw_bits < other.raw_bits - 1e-9)
    }
}

/// Greedy partitioner for one map under one context assignment.
pub struct Partitioner<'m> {
    est: Estimator<'m>,
    class: MapClass,
}

impl<'m> Partitioner<'m> {
    pub fn new(map: &'m DataMap, adaptive: bool) -> Self {
        Self {
            class: map.class(),
            est: Estimator::new(map, adaptive),
        }
    }

    pub fn estimate(&mut self, region: &Region) -> u64 {
        self.est.estimate(region)
    }

    fn axes(&self, region: &Region) -> impl Iterator<Item = Axis> + '_ {
        let is_bitmap = self.class == MapClass::Bitmap;
        let region = *region;
        Axis::ALL
            .into_iter()
            .filter(move |a| region.extent(a.dim()) > 1 && (is_bitmap || *a != Axis::P))
    }

    /// Cheapest split by flat child estimates plus split cost. Equal
    /// whole-bit totals are ordered by the unrounded estimates, then by axis,
    /// then by position.
    pub fn best_split(&mut self, region: &Region) -> Option<SplitChoice> {
        let mut best: Option<SplitChoice> = None;
        let axes: Vec<Axis> = self.axes(region).collect();
        for axis in axes {
            let extent = region.extent(axis.dim());
            let split_bits = split_cost(self.class, axis, extent);
            let candidates = match self.class {
                MapClass::Intmap => {
                    let pos = halfway(extent);
                    let (a, b) = region.split(axis.dim(), pos);
                    let (ab, araw) = self.est.estimate_with_raw(&a);
                    let (bb, braw) = self.est.estimate_with_raw(&b);
                    vec![(pos, ab, bb, araw + braw)]
                }
                MapClass::Bitmap => self.bitmap_candidates(region, axis),
            };
            for (pos, first_bits, second_bits, raw_bits) in candidates {
                let c = SplitChoice {
                    axis,
                    pos,
                    first_bits,
                    second_bits,
                    split_bits,
                    raw_bits,
                };
                if best.is_none_or(|b| c.better_than(&b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    /// Flat estimates of both halves for every position along `axis`, from
    /// per-slice binary counts.
    fn bitmap_candidates(&self, region: &Region, axis: Axis) -> Vec<(usize, u64, u64, f64)> {
        let map = self.est.map();
        let ctx = self.est.contexts();
        let k = self.est.context_count();
        let d = axis.dim();
        let extent = region.extent(d);
        let mut slices = vec![[[0u64; 2]; 8]; extent];
        for p in region.lo[0]..region.hi[0] {
            for y in region.lo[1]..region.hi[1] {
                for x in region.lo[2]..region.hi[2] {
                    let i = map.index(p, y, x);
                    if map.is_dontcare(i) {
                        continue;
                    }
                    let s = [p, y, x][d] - region.lo[d];
                    slices[s][ctx[i] as usize][map.symbol(i) as usize] += 1;
                }
            }
        }
        let mut total = [[0u64; 2]; 8];
        for s in &slices {
            for c in 0..k {
                total[c][0] += s[c][0];
                total[c][1] += s[c][1];
            }
        }
        let mut left = [[0u64; 2]; 8];
        let mut out = Vec::with_capacity(extent - 1);
        for pos in 1..extent {
            let mut right = [[0u64; 2]; 8];
            for c in 0..k {
                left[c][0] += slices[pos - 1][c][0];
                left[c][1] += slices[pos - 1][c][1];
                right[c][0] = total[c][0] - left[c][0];
                right[c][1] = total[c][1] - left[c][1];
            }
            let (a, b) = (binary_raw(&left[..k]), binary_raw(&right[..k]));
            out.push((pos, ceil_bits(a), ceil_bits(b), a + b));
        }
        out
    }

    /// Runs the decomposition over the whole map. Returns the tree and its
    /// realised estimated cost (leaf contents plus split signalling).
    pub fn run(&mut self) -> (PartitionTree, u64) {
        let region = self.est.map().full_region();
        self.recurse(region, None)
    }

    fn recurse(&mut self, region: Region, flat: Option<u64>) -> (PartitionTree, u64) {
        match self.est.map().classify(&region) {
            RegionContent::Zero => {
                return (
                    PartitionTree::Leaf {
                        region,
                        leaf: Leaf::Zero,
                    },
                    0,
                )
            }
            RegionContent::Same(v) => {
                return (
                    PartitionTree::Leaf {
                        region,
                        leaf: Leaf::Same(v),
                    },
                    0,
                )
            }
            RegionContent::Mixed => {}
        }
        let unsplit = flat.unwrap_or_else(|| self.estimate(&region));
        let mixed_leaf = PartitionTree::Leaf {
            region,
            leaf: Leaf::Mixed,
        };
        let Some(choice) = self.best_split(&region) else {
            return (mixed_leaf, unsplit);
        };
        let (a, b) = region.split(choice.axis.dim(), choice.pos);
        let (first, first_cost) = self.recurse(a, Some(choice.first_bits));
        let (second, second_cost) = self.recurse(b, Some(choice.second_bits));
        let split_total = first_cost + second_cost + choice.split_bits;
        if split_total < unsplit {
            (
                PartitionTree::Split {
                    region,
                    axis: choice.axis,
                    pos: choice.pos,
                    first: Box::new(first),
                    second: Box::new(second),
                },
                split_total,
            )
        } else {
            (mixed_leaf, unsplit)
        }
    }
}

/// Unrounded estimate from per-context `[zeros, ones]` counts.
fn binary_raw(counts: &[[u64; 2]]) -> f64 {
    let zeros: u64 = counts.iter().map(|c| c[0]).sum();
    let ones: u64 = counts.iter().map(|c| c[1]).sum();
    if zeros == 0 || ones == 0 {
        return 0.0;
    }
    let nlogn = |n: u64| if n <= 1 { 0.0 } else { n as f64 * (n as f64).log2() };
    let mut bits = 0.0;
    for c in counts {
        let n = c[0] + c[1];
        if n <= 1 {
            continue;
        }
        bits += nlogn(n) - nlogn(c[0]) - nlogn(c[1]) + 0.5 * (n as f64).log2();
    }
    bits
}

/// Decomposes `map`, returning the partition tree.
pub fn btbd(map: &DataMap, adaptive: bool) -> PartitionTree {
    Partitioner::new(map, adaptive).run().0
}
