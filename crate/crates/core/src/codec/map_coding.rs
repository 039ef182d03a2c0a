//! Coding of one data map. Every eligible mode is tried and the shortest
//! wins; the mode index is signalled in front of the payload.
//!
//! Partitioned payloads carry the tree in pre-order, then one arithmetic
//! segment holding the values of intmap uniform leaves followed by the
//! cells of mixed leaves. Flat payloads code every cared-for cell in one
//! arithmetic segment. Residual maps may also use the run-length mode.

use crate::btbd::context::context_of;
use crate::btbd::partition::{halfway, position_bits};
use crate::btbd::{btbd, Axis, DataMap, Leaf, MapKind, PartitionTree, Region};
use crate::entropy::tree_code::{read_node, write_node};
use crate::entropy::{run_mode, AdaptiveModel, BitReader, BitWriter, ContextModels, MapClass, NodeKind, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapCodingMode {
    /// Partition tree with context-adaptive leaves.
    PartitionedAdaptive,
    /// Partition tree with a single context.
    PartitionedStatic,
    FlatAdaptive,
    FlatStatic,
    /// Exp-Golomb zero runs; residual maps only.
    RunLength,
}

impl MapCodingMode {
    pub const ALL: [MapCodingMode; 5] = [
        MapCodingMode::PartitionedAdaptive,
        MapCodingMode::PartitionedStatic,
        MapCodingMode::FlatAdaptive,
        MapCodingMode::FlatStatic,
        MapCodingMode::RunLength,
    ];

    pub fn index(self) -> u32 {
        self as u32
    }

    pub fn from_index(i: u64) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn is_partitioned(self) -> bool {
        matches!(self, Self::PartitionedAdaptive | Self::PartitionedStatic)
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Self::PartitionedAdaptive | Self::FlatAdaptive)
    }

    /// Modes available for a map kind.
    pub fn eligible(kind: MapKind) -> &'static [MapCodingMode] {
        if kind == MapKind::Residual {
            &Self::ALL
        } else {
            &Self::ALL[..4]
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PartitionedAdaptive => "partitioned-adaptive",
            Self::PartitionedStatic => "partitioned-static",
            Self::FlatAdaptive => "flat-adaptive",
            Self::FlatStatic => "flat-static",
            Self::RunLength => "run-length",
        }
    }
}

/// Width of the mode field.
pub fn mode_field_bits(kind: MapKind) -> u32 {
    if kind == MapKind::Residual {
        3
    } else {
        2
    }
}

const RESIDUAL_BOUND_BITS: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapCodingReport {
    pub kind: MapKind,
    /// `None` when the map has no cared-for cells.
    pub mode: Option<MapCodingMode>,
    /// Bits written, mode field included.
    pub bits: usize,
    /// Size of every mode tried.
    pub candidates: Vec<(MapCodingMode, usize)>,
    /// Leaves of the chosen partition (1 for flat and run-length coding).
    pub leaves: usize,
}

impl MapCodingReport {
    fn best_of(&self, partitioned: bool) -> Option<usize> {
        self.candidates
            .iter()
            .filter(|(m, _)| m.is_partitioned() == partitioned)
            .map(|&(_, b)| b)
            .min()
    }

    /// Shortest partitioned candidate.
    pub fn best_partitioned(&self) -> Option<usize> {
        self.best_of(true)
    }

    /// Shortest candidate without a partition tree.
    pub fn best_unpartitioned(&self) -> Option<usize> {
        self.best_of(false)
    }
}

/// Encodes `map` with the shortest eligible mode.
pub fn encode_map(w: &mut BitWriter, map: &DataMap) -> MapCodingReport {
    let kind = map.kind();
    if map.coded_cells() == 0 {
        w.write_bits(0, mode_field_bits(kind));
        return MapCodingReport {
            kind,
            mode: None,
            bits: mode_field_bits(kind) as usize,
            candidates: Vec::new(),
            leaves: 0,
        };
    }
    let mut best: Option<(MapCodingMode, BitWriter, usize)> = None;
    let mut candidates = Vec::new();
    for &mode in MapCodingMode::eligible(kind) {
        let mut scratch = BitWriter::new();
        let leaves = encode_with_mode(&mut scratch, map, mode);
        candidates.push((mode, scratch.len()));
        if best.as_ref().is_none_or(|(_, b, _)| scratch.len() < b.len()) {
            best = Some((mode, scratch, leaves));
        }
    }
    let (mode, payload, leaves) = best.expect("at least one mode");
    w.append(&payload);
    MapCodingReport {
        kind,
        mode: Some(mode),
        bits: payload.len(),
        candidates,
        leaves,
    }
}

/// Encodes a map with cared-for cells under a fixed mode. Returns the leaf
/// count.
pub fn encode_with_mode(w: &mut BitWriter, map: &DataMap, mode: MapCodingMode) -> usize {
    debug_assert!(MapCodingMode::eligible(map.kind()).contains(&mode));
    w.write_bits(u64::from(mode.index()), mode_field_bits(map.kind()));
    if map.kind() == MapKind::Residual {
        w.write_bits(u64::from(map.bound()), RESIDUAL_BOUND_BITS);
    }
    match mode {
        MapCodingMode::RunLength => {
            let mut values = Vec::with_capacity(map.coded_cells());
            map.for_each_cell(&map.full_region(), |i| {
                if let Some(v) = map.get(i) {
                    values.push(v);
                }
            });
            run_mode::encode(w, &values);
            1
        }
        MapCodingMode::FlatAdaptive | MapCodingMode::FlatStatic => {
            encode_segment(w, map, &[(map.full_region(), Leaf::Mixed)], mode.is_adaptive());
            1
        }
        MapCodingMode::PartitionedAdaptive | MapCodingMode::PartitionedStatic => {
            let tree = btbd(map, mode.is_adaptive());
            write_tree(w, &tree, map.class());
            let leaves = tree.leaves();
            encode_segment(w, map, &leaves, mode.is_adaptive());
            leaves.len()
        }
    }
}

fn write_tree(w: &mut BitWriter, tree: &PartitionTree, class: MapClass) {
    match tree {
        PartitionTree::Leaf { leaf, .. } => {
            write_node(w, leaf.node_kind(), class).expect("leaf codes exist for both classes");
        }
        PartitionTree::Split {
            region,
            axis,
            pos,
            first,
            second,
        } => {
            write_node(w, axis.node_kind(), class).expect("split axis valid for map class");
            if class == MapClass::Bitmap {
                w.write_bits((*pos - 1) as u64, position_bits(region.extent(axis.dim())));
            }
            write_tree(w, first, class);
            write_tree(w, second, class);
        }
    }
}

fn needs_segment(class: MapClass, leaves: &[(Region, Leaf)]) -> bool {
    leaves.iter().any(|(_, l)| match l {
        Leaf::Mixed => true,
        Leaf::Same(_) => class == MapClass::Intmap,
        Leaf::Zero => false,
    })
}

fn mark_known(map: &DataMap, leaves: &[(Region, Leaf)], known: &mut [bool]) {
    for (region, leaf) in leaves {
        if *leaf != Leaf::Mixed {
            map.for_each_cell(region, |i| known[i] = true);
        }
    }
}

fn context_count(map: &DataMap, adaptive: bool) -> usize {
    if adaptive {
        map.kind().context_kind().count()
    } else {
        1
    }
}

/// Visits the cared-for cells of `region` in raster order as `(index, p, y, x)`.
fn for_each_cared(map: &DataMap, region: &Region, mut f: impl FnMut(usize, usize, usize, usize) -> Result<()>) -> Result<()> {
    for p in region.lo[0]..region.hi[0] {
        for y in region.lo[1]..region.hi[1] {
            for x in region.lo[2]..region.hi[2] {
                let i = map.index(p, y, x);
                if !map.is_dontcare(i) {
                    f(i, p, y, x)?;
                }
            }
        }
    }
    Ok(())
}

fn encode_segment(w: &mut BitWriter, map: &DataMap, leaves: &[(Region, Leaf)], adaptive: bool) {
    let class = map.class();
    if !needs_segment(class, leaves) {
        return;
    }
    let bound = map.bound();
    let ckind = map.kind().context_kind();
    let mut known = vec![false; map.len()];
    mark_known(map, leaves, &mut known);
    let mut enc = RangeEncoder::new(w);
    if class == MapClass::Intmap {
        let mut uniform = (bound >= 1).then(|| AdaptiveModel::new(bound as usize));
        for (_, leaf) in leaves {
            if let (Leaf::Same(v), Some(m)) = (leaf, uniform.as_mut()) {
                enc.encode(m, (*v - 1) as usize);
            }
        }
    }
    let mut models = ContextModels::new(context_count(map, adaptive), bound as usize + 1);
    for (region, leaf) in leaves {
        if *leaf != Leaf::Mixed {
            continue;
        }
        for_each_cared(map, region, |i, p, y, x| {
            let ctx = if adaptive { context_of(map, ckind, p, y, x, Some(&known)) } else { 0 };
            enc.encode(models.get(ctx), map.symbol(i) as usize);
            known[i] = true;
            Ok(())
        })
        .expect("encoding cannot fail");
    }
    enc.finish();
}

/// Decodes a map into `template`, which carries the kind, dimensions,
/// don't-care layout, anchors and (for residual maps) the quantiser step.
/// For residual maps the template bound is the largest admissible rank.
pub fn decode_map(r: &mut BitReader, mut map: DataMap) -> Result<DataMap> {
    let kind = map.kind();
    let field = r.read_bits(mode_field_bits(kind))?;
    if map.coded_cells() == 0 {
        if field != 0 {
            return Err(r.error(format!("{} map has no coded cells but signals mode {field}", kind.name())));
        }
        if kind == MapKind::Residual {
            map.set_bound(0);
        }
        return Ok(map);
    }
    let mode = MapCodingMode::from_index(field)
        .filter(|m| MapCodingMode::eligible(kind).contains(m))
        .ok_or_else(|| r.error(format!("invalid {} map coding mode {field}", kind.name())))?;
    if kind == MapKind::Residual {
        let bound = r.read_bits(RESIDUAL_BOUND_BITS)? as u32;
        if bound > map.bound() {
            return Err(r.error(format!("residual bound {bound} exceeds {}", map.bound())));
        }
        map.set_bound(bound);
    }
    match mode {
        MapCodingMode::RunLength => {
            let values = run_mode::decode(r, map.coded_cells(), map.bound())?;
            let mut it = values.into_iter();
            let region = map.full_region();
            let mut cells = Vec::new();
            map.for_each_cell(&region, |i| {
                if !map.is_dontcare(i) {
                    cells.push(i);
                }
            });
            for i in cells {
                map.set(i, it.next().unwrap_or(0));
            }
        }
        MapCodingMode::FlatAdaptive | MapCodingMode::FlatStatic => {
            let leaves = [(map.full_region(), Leaf::Mixed)];
            decode_segment(r, &mut map, &leaves, mode.is_adaptive())?;
        }
        MapCodingMode::PartitionedAdaptive | MapCodingMode::PartitionedStatic => {
            let mut leaves = Vec::new();
            read_tree(r, map.class(), map.full_region(), &mut leaves)?;
            decode_segment(r, &mut map, &leaves, mode.is_adaptive())?;
        }
    }
    Ok(map)
}

fn read_tree(r: &mut BitReader, class: MapClass, region: Region, out: &mut Vec<(Region, Leaf)>) -> Result<()> {
    let node = read_node(r, class)?;
    match node {
        NodeKind::LeafZero => out.push((region, Leaf::Zero)),
        NodeKind::LeafSame => out.push((region, Leaf::Same(1))),
        NodeKind::LeafMixed => out.push((region, Leaf::Mixed)),
        NodeKind::SplitX | NodeKind::SplitY | NodeKind::SplitP => {
            let axis = Axis::from_node_kind(node).expect("split node");
            let extent = region.extent(axis.dim());
            if extent < 2 {
                return Err(r.error("split along an axis of extent 1"));
            }
            let pos = match class {
                MapClass::Bitmap => r.read_bits(position_bits(extent))? as usize + 1,
                MapClass::Intmap => halfway(extent),
            };
            if pos >= extent {
                return Err(r.error("split position outside region"));
            }
            let (a, b) = region.split(axis.dim(), pos);
            read_tree(r, class, a, out)?;
            read_tree(r, class, b, out)?;
        }
    }
    Ok(())
}

fn decode_segment(r: &mut BitReader, map: &mut DataMap, leaves: &[(Region, Leaf)], adaptive: bool) -> Result<()> {
    let class = map.class();
    let bound = map.bound();
    let segment = needs_segment(class, leaves);
    let mut dec = if segment { Some(RangeDecoder::new(r)?) } else { None };
    let mut uniform_values = Vec::new();
    if let (Some(dec), MapClass::Intmap) = (dec.as_mut(), class) {
        let mut uniform = (bound >= 1).then(|| AdaptiveModel::new(bound as usize));
        for (_, leaf) in leaves {
            if let Leaf::Same(_) = leaf {
                let Some(m) = uniform.as_mut() else {
                    return Err(Error::decode(0, "uniform leaf in an all-zero map"));
                };
                uniform_values.push(dec.decode(m)? as u32 + 1);
            }
        }
    }
    let mut values = uniform_values.into_iter();
    let mut known = vec![false; map.len()];
    for (region, leaf) in leaves {
        let v = match leaf {
            Leaf::Zero => 0,
            Leaf::Same(_) if class == MapClass::Bitmap => 1,
            Leaf::Same(_) => values.next().unwrap_or(0),
            Leaf::Mixed => continue,
        };
        let mut cells = Vec::new();
        map.for_each_cell(region, |i| cells.push(i));
        for i in cells {
            known[i] = true;
            if !map.is_dontcare(i) {
                map.set(i, v);
            }
        }
    }
    let Some(mut dec) = dec else {
        return Ok(());
    };
    let ckind = map.kind().context_kind();
    let mut models = ContextModels::new(context_count(map, adaptive), bound as usize + 1);
    for (region, leaf) in leaves {
        if *leaf != Leaf::Mixed {
            continue;
        }
        let mut cells = Vec::new();
        for_each_cared(map, region, |i, p, y, x| {
            cells.push((i, p, y, x));
            Ok(())
        })?;
        for (i, p, y, x) in cells {
            let ctx = if adaptive { context_of(map, ckind, p, y, x, Some(&known)) } else { 0 };
            let s = dec.decode(models.get(ctx))? as u32;
            map.set(i, s);
            known[i] = true;
        }
    }
    dec.finish();
    Ok(())
}
