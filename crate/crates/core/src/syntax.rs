//! Frame-level data maps formed from CTU decisions, and the don't-care
//! layout each map inherits from the maps coded before it.

use crate::btbd::{DataMap, MapKind};
use crate::error::{Error, Result};
use crate::frame::{CuRect, CTU_SIZE, MIN_CU_SIZE};
use crate::prediction::PredictionMode;
use crate::rdo::{CtuNode, FrameDecisions};

/// The six coded maps of a frame plus the virtual significance map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameMaps {
    pub div64: DataMap,
    pub div32: DataMap,
    pub div16: DataMap,
    pub mode: DataMap,
    pub mvz: DataMap,
    pub residual: DataMap,
    /// `H/8 × W/8`; `false` at the top-left cell of every leaf CU.
    pub significance: Vec<bool>,
}

impl FrameMaps {
    pub fn get(&self, kind: MapKind) -> &DataMap {
        match kind {
            MapKind::Div64 => &self.div64,
            MapKind::Div32 => &self.div32,
            MapKind::Div16 => &self.div16,
            MapKind::Mode => &self.mode,
            MapKind::Mvz => &self.mvz,
            MapKind::Residual => &self.residual,
        }
    }
}

fn grid_size(kind: MapKind) -> usize {
    match kind {
        MapKind::Div64 => 64,
        MapKind::Div32 => 32,
        MapKind::Div16 => 16,
        _ => MIN_CU_SIZE,
    }
}

/// Division map with cells cared for exactly where the parent level split.
/// `parent` is `None` for the 64×64 level.
pub fn div_template(kind: MapKind, width: usize, height: usize, parent: Option<&DataMap>) -> DataMap {
    let dims = kind.dims(width, height);
    let mut m = DataMap::empty(kind, dims, 1);
    for y in 0..dims[1] {
        for x in 0..dims[2] {
            let cared = match parent {
                None => true,
                Some(p) => p.get(p.index(0, y / 2, x / 2)) == Some(1),
            };
            if cared {
                let i = m.index(0, y, x);
                m.set(i, 0);
            }
        }
    }
    m
}

/// Leaf CUs in coding order (CTUs in raster order, z-order inside) from
/// decoded division maps.
pub fn leaves_from_division(div64: &DataMap, div32: &DataMap, div16: &DataMap, width: usize, height: usize) -> Result<Vec<CuRect>> {
    fn walk(rect: CuRect, maps: [&DataMap; 3], out: &mut Vec<CuRect>) -> Result<()> {
        let split = if rect.size == MIN_CU_SIZE {
            false
        } else {
            let level = rect.depth();
            let m = maps[level];
            let g = grid_size(m.kind());
            match m.get(m.index(0, rect.row / g, rect.col / g)) {
                Some(v) => v == 1,
                None => return Err(Error::decode(0, "division flag missing for an existing CU")),
            }
        };
        if split {
            for q in rect.quadrants() {
                walk(q, maps, out)?;
            }
        } else {
            out.push(rect);
        }
        Ok(())
    }
    let mut out = Vec::new();
    for row in (0..height).step_by(CTU_SIZE) {
        for col in (0..width).step_by(CTU_SIZE) {
            walk(
                CuRect {
                    row,
                    col,
                    size: CTU_SIZE,
                },
                [div64, div32, div16],
                &mut out,
            )?;
        }
    }
    Ok(out)
}

/// Virtual significance map of a leaf layout.
pub fn significance(leaves: &[CuRect], width: usize, height: usize) -> Vec<bool> {
    let gw = width / MIN_CU_SIZE;
    let mut s = vec![true; gw * (height / MIN_CU_SIZE)];
    for l in leaves {
        s[(l.row / MIN_CU_SIZE) * gw + l.col / MIN_CU_SIZE] = false;
    }
    s
}

fn anchor_index(rect: &CuRect, gw: usize) -> usize {
    (rect.row / MIN_CU_SIZE) * gw + rect.col / MIN_CU_SIZE
}

/// Mode map with anchor cells cared for and every cell pointing at the
/// anchor of its CU.
pub fn mode_template(leaves: &[CuRect], width: usize, height: usize) -> DataMap {
    let dims = MapKind::Mode.dims(width, height);
    let gw = dims[2];
    let mut m = DataMap::empty(MapKind::Mode, dims, 3);
    let mut anchor = vec![0u32; m.len()];
    for l in leaves {
        let a = anchor_index(l, gw);
        let cells = l.size / MIN_CU_SIZE;
        for dy in 0..cells {
            for dx in 0..cells {
                anchor[a + dy * gw + dx] = a as u32;
            }
        }
        m.set(a, 0);
    }
    m.set_anchor(anchor);
    m
}

/// Motion zero/non-zero map cared for at the anchors of InterM CUs.
pub fn mvz_template(leaves: &[CuRect], modes: &[PredictionMode], width: usize, height: usize) -> DataMap {
    let dims = MapKind::Mvz.dims(width, height);
    let mut m = DataMap::empty(MapKind::Mvz, dims, 1);
    for (l, &mode) in leaves.iter().zip(modes) {
        if mode == PredictionMode::InterM {
            let (y, x) = (l.row / MIN_CU_SIZE, l.col / MIN_CU_SIZE);
            for p in 0..2 {
                let i = m.index(p, y, x);
                m.set(i, 0);
            }
        }
    }
    m
}

/// Residual map cared for over every pixel of non-Skip CUs.
pub fn residual_template(leaves: &[CuRect], modes: &[PredictionMode], width: usize, height: usize, step: u32, bound: u32) -> DataMap {
    let dims = MapKind::Residual.dims(width, height);
    let mut m = DataMap::empty(MapKind::Residual, dims, bound);
    m.set_step(step);
    for (l, &mode) in leaves.iter().zip(modes) {
        if mode != PredictionMode::Skip {
            for r in l.row..l.row + l.size {
                for c in l.col..l.col + l.size {
                    let i = m.index(0, r, c);
                    m.set(i, 0);
                }
            }
        }
    }
    m
}

fn fill_division(node: &CtuNode, rect: CuRect, maps: &mut [&mut DataMap; 3]) {
    if rect.size == MIN_CU_SIZE {
        return;
    }
    let level = rect.depth();
    let g = grid_size(maps[level].kind());
    let i = maps[level].index(0, rect.row / g, rect.col / g);
    match node {
        CtuNode::Leaf(_) => maps[level].set(i, 0),
        CtuNode::Split(children) => {
            maps[level].set(i, 1);
            for (child, q) in children.iter().zip(rect.quadrants()) {
                fill_division(child, q, maps);
            }
        }
    }
}

/// Builds every map of a frame from its decisions.
pub fn form_maps(decisions: &FrameDecisions, width: usize, height: usize, step: u32) -> FrameMaps {
    let mut div64 = DataMap::empty(MapKind::Div64, MapKind::Div64.dims(width, height), 1);
    let mut div32 = DataMap::empty(MapKind::Div32, MapKind::Div32.dims(width, height), 1);
    let mut div16 = DataMap::empty(MapKind::Div16, MapKind::Div16.dims(width, height), 1);
    for t in &decisions.trees {
        fill_division(&t.root, t.rect, &mut [&mut div64, &mut div32, &mut div16]);
    }
    let leaves = decisions.leaves();
    let rects: Vec<CuRect> = leaves.iter().map(|l| l.rect).collect();
    let modes: Vec<PredictionMode> = leaves.iter().map(|l| l.mode).collect();

    let mut mode = mode_template(&rects, width, height);
    let gw = width / MIN_CU_SIZE;
    for l in &leaves {
        mode.set(anchor_index(&l.rect, gw), u32::from(l.mode.code()));
    }

    let mut mvz = mvz_template(&rects, &modes, width, height);
    for l in leaves.iter().filter(|l| l.mode == PredictionMode::InterM) {
        let (y, x) = (l.rect.row / MIN_CU_SIZE, l.rect.col / MIN_CU_SIZE);
        for p in 0..2 {
            let i = mvz.index(p, y, x);
            mvz.set(i, u32::from(l.mv.component(p) != 0));
        }
    }

    let mut residual = residual_template(&rects, &modes, width, height, step, 255);
    for l in leaves.iter().filter(|l| l.mode != PredictionMode::Skip) {
        let s = l.rect.size;
        for r in 0..s {
            for c in 0..s {
                let i = residual.index(0, l.rect.row + r, l.rect.col + c);
                residual.set(i, l.ranks[r * s + c]);
            }
        }
    }
    residual.set_bound(residual.max_symbol());

    FrameMaps {
        div64,
        div32,
        div16,
        mode,
        mvz,
        residual,
        significance: significance(&rects, width, height),
    }
}
