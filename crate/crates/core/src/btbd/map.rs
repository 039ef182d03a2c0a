//! Frame-level data maps and cuboid regions over them.

use crate::entropy::MapClass;

/// The six per-frame maps, in coding order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapKind {
    Div64,
    Div32,
    Div16,
    Mode,
    Mvz,
    Residual,
}

impl MapKind {
    pub const ALL: [MapKind; 6] = [
        MapKind::Div64,
        MapKind::Div32,
        MapKind::Div16,
        MapKind::Mode,
        MapKind::Mvz,
        MapKind::Residual,
    ];

    pub fn class(self) -> MapClass {
        match self {
            MapKind::Mode | MapKind::Residual => MapClass::Intmap,
            _ => MapClass::Bitmap,
        }
    }

    pub fn context_kind(self) -> ContextKind {
        match self {
            MapKind::Div64 | MapKind::Div32 | MapKind::Div16 => ContextKind::Bitmap2d,
            MapKind::Mvz => ContextKind::Bitmap3d,
            MapKind::Mode => ContextKind::Nominal,
            MapKind::Residual => ContextKind::Ordinal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Div64 => "div64",
            MapKind::Div32 => "div32",
            MapKind::Div16 => "div16",
            MapKind::Mode => "mode",
            MapKind::Mvz => "mvz",
            MapKind::Residual => "residual",
        }
    }

    /// Map extents `[p, y, x]` for a frame of the given padded size.
    pub fn dims(self, width: usize, height: usize) -> [usize; 3] {
        match self {
            MapKind::Div64 => [1, height / 64, width / 64],
            MapKind::Div32 => [1, height / 32, width / 32],
            MapKind::Div16 => [1, height / 16, width / 16],
            MapKind::Mode => [1, height / 8, width / 8],
            MapKind::Mvz => [2, height / 8, width / 8],
            MapKind::Residual => [1, height, width],
        }
    }
}

/// Context model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ContextKind {
    Bitmap2d,
    Bitmap3d,
    Nominal,
    Ordinal,
}

impl ContextKind {
    pub fn count(self) -> usize {
        match self {
            ContextKind::Bitmap2d => 4,
            ContextKind::Bitmap3d => 8,
            ContextKind::Nominal => 16,
            ContextKind::Ordinal => 4,
        }
    }
}

/// Axis-aligned half-open cuboid `[lo, hi)` with coordinates `[p, y, x]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Region {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Region {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        debug_assert!((0..3).all(|d| lo[d] <= hi[d]));
        Self { lo, hi }
    }

    #[inline]
    pub fn extent(&self, d: usize) -> usize {
        self.hi[d] - self.lo[d]
    }

    pub fn volume(&self) -> usize {
        (0..3).map(|d| self.extent(d)).product()
    }

    /// Splits `s` cells into axis `d`, `1 <= s < extent(d)`.
    pub fn split(&self, d: usize, s: usize) -> (Region, Region) {
        debug_assert!(s >= 1 && s < self.extent(d));
        let mut a = *self;
        let mut b = *self;
        a.hi[d] = self.lo[d] + s;
        b.lo[d] = self.lo[d] + s;
        (a, b)
    }

    pub fn contains(&self, c: [usize; 3]) -> bool {
        (0..3).all(|d| c[d] >= self.lo[d] && c[d] < self.hi[d])
    }
}

/// A 1–3 dimensional grid of symbols over `[0, bound]` with a don't-care
/// mask. Don't-care cells carry no information and are never coded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataMap {
    kind: MapKind,
    dims: [usize; 3],
    bound: u32,
    symbols: Vec<u32>,
    dontcare: Vec<bool>,
    /// Mode maps only: index of the cell holding the code word of the CU that
    /// covers each cell.
    anchor: Vec<u32>,
    /// Residual maps only: quantiser step used for neighbour magnitudes.
    step: u32,
}

impl DataMap {
    /// A map with every cell don't-care.
    pub fn empty(kind: MapKind, dims: [usize; 3], bound: u32) -> Self {
        let n = dims.iter().product();
        Self {
            kind,
            dims,
            bound,
            symbols: vec![0; n],
            dontcare: vec![true; n],
            anchor: Vec::new(),
            step: 1,
        }
    }

    /// Builds a map from explicit symbols; `None` marks don't-care.
    pub fn from_cells(kind: MapKind, dims: [usize; 3], bound: u32, cells: &[Option<u32>]) -> Self {
        let mut m = Self::empty(kind, dims, bound);
        assert_eq!(cells.len(), m.len());
        for (i, c) in cells.iter().enumerate() {
            if let Some(v) = *c {
                m.set(i, v);
            }
        }
        m
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn class(&self) -> MapClass {
        self.kind.class()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn set_bound(&mut self, bound: u32) {
        self.bound = bound;
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn set_step(&mut self, step: u32) {
        self.step = step;
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn full_region(&self) -> Region {
        Region::new([0; 3], self.dims)
    }

    #[inline]
    pub fn index(&self, p: usize, y: usize, x: usize) -> usize {
        (p * self.dims[1] + y) * self.dims[2] + x
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<u32> {
        (!self.dontcare[i]).then_some(self.symbols[i])
    }

    #[inline]
    pub fn symbol(&self, i: usize) -> u32 {
        self.symbols[i]
    }

    #[inline]
    pub fn is_dontcare(&self, i: usize) -> bool {
        self.dontcare[i]
    }

    pub fn dontcare_mask(&self) -> &[bool] {
        &self.dontcare
    }

    pub fn set(&mut self, i: usize, v: u32) {
        debug_assert!(v <= self.bound, "{} symbol {v} above bound {}", self.kind.name(), self.bound);
        self.symbols[i] = v;
        self.dontcare[i] = false;
    }

    pub fn clear(&mut self, i: usize) {
        self.symbols[i] = 0;
        self.dontcare[i] = true;
    }

    pub fn set_anchor(&mut self, anchor: Vec<u32>) {
        assert_eq!(anchor.len(), self.len());
        self.anchor = anchor;
    }

    /// Cell holding the covering CU's code word (mode maps).
    #[inline]
    pub fn anchor(&self, i: usize) -> Option<usize> {
        self.anchor.get(i).map(|&a| a as usize)
    }

    /// Number of cells that are not don't-care.
    pub fn coded_cells(&self) -> usize {
        self.dontcare.iter().filter(|&&d| !d).count()
    }

    /// Largest symbol over cared-for cells.
    pub fn max_symbol(&self) -> u32 {
        self.symbols
            .iter()
            .zip(&self.dontcare)
            .filter(|(_, &d)| !d)
            .map(|(&s, _)| s)
            .max()
            .unwrap_or(0)
    }

    /// Calls `f(index)` for every cell of `region` in raster (p, y, x) order.
    #[inline]
    pub fn for_each_cell(&self, region: &Region, mut f: impl FnMut(usize)) {
        for p in region.lo[0]..region.hi[0] {
            for y in region.lo[1]..region.hi[1] {
                let base = self.index(p, y, 0);
                for x in region.lo[2]..region.hi[2] {
                    f(base + x);
                }
            }
        }
    }

    /// Symbol content of a region.
    pub fn classify(&self, region: &Region) -> RegionContent {
        let mut first: Option<u32> = None;
        let mut mixed = false;
        self.for_each_cell(region, |i| {
            if mixed || self.dontcare[i] {
                return;
            }
            match first {
                None => first = Some(self.symbols[i]),
                Some(v) if v != self.symbols[i] => mixed = true,
                _ => {}
            }
        });
        match (mixed, first) {
            (true, _) => RegionContent::Mixed,
            (false, None) | (false, Some(0)) => RegionContent::Zero,
            (false, Some(v)) => RegionContent::Same(v),
        }
    }
}

/// What a region holds once don't-care cells are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionContent {
    /// Only zeros, or nothing at all.
    Zero,
    /// One repeated non-zero symbol.
    Same(u32),
    Mixed,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_ignores_dontcare() {
        let m = DataMap::from_cells(
            MapKind::Mode,
            [1, 2, 2],
            3,
            &[Some(2), None, Some(2), None],
        );
        assert_eq!(m.classify(&m.full_region()), RegionContent::Same(2));
        let e = DataMap::empty(MapKind::Mode, [1, 2, 2], 3);
        assert_eq!(e.classify(&e.full_region()), RegionContent::Zero);
        let mixed = DataMap::from_cells(MapKind::Div64, [1, 1, 3], 1, &[Some(0), None, Some(1)]);
        assert_eq!(mixed.classify(&mixed.full_region()), RegionContent::Mixed);
    }

    #[test]
    fn split_partitions_region() {
        let r = Region::new([0, 0, 0], [2, 4, 6]);
        for d in 0..3 {
            for s in 1..r.extent(d) {
                let (a, b) = r.split(d, s);
                assert_eq!(a.volume() + b.volume(), r.volume());
                assert_eq!(a.hi[d], b.lo[d]);
            }
        }
    }

    #[test]
    fn kind_dims() {
        assert_eq!(MapKind::Mvz.dims(256, 128), [2, 16, 32]);
        assert_eq!(MapKind::Div64.dims(256, 128), [1, 2, 4]);
        assert_eq!(MapKind::Residual.dims(64, 64), [1, 64, 64]);
    }
}
