//! Causal context models over data maps.
//!
//! Each cell's context is formed from its predecessor along every axis:
//! left (x), above (y), and the previous plane (p).

use super::map::{ContextKind, DataMap, MapKind};

/// Upper bin edges of the residual-magnitude contexts.
pub const RESIDUAL_BIN_EDGES: [u32; 3] = [4, 22, 117];

#[inline]
pub fn residual_bin(sum: u32) -> usize {
    RESIDUAL_BIN_EDGES.iter().take_while(|&&e| sum > e).count()
}

/// Magnitude of the dequantised residual attributed to a residual rank.
#[inline]
pub fn rank_magnitude(rank: u32, step: u32) -> u32 {
    (step * rank.div_ceil(2)).min(255)
}

/// Value cell `i` contributes as a neighbour. `known` masks cells whose
/// value is not yet available (treated as 0); `None` means all are known.
#[inline]
pub fn neighbor_value(map: &DataMap, i: usize, known: Option<&[bool]>) -> u32 {
    let is_known = |j: usize| known.is_none_or(|k| k[j]);
    if map.is_dontcare(i) {
        if map.kind() == MapKind::Mode {
            if let Some(a) = map.anchor(i) {
                if !map.is_dontcare(a) && is_known(a) {
                    return map.symbol(a);
                }
            }
        }
        return 0;
    }
    if !is_known(i) {
        return 0;
    }
    let s = map.symbol(i);
    if map.kind() == MapKind::Residual {
        rank_magnitude(s, map.step())
    } else {
        s
    }
}

/// Context id of cell `(p, y, x)`.
#[inline]
pub fn context_of(map: &DataMap, kind: ContextKind, p: usize, y: usize, x: usize, known: Option<&[bool]>) -> usize {
    let left = if x > 0 {
        neighbor_value(map, map.index(p, y, x - 1), known)
    } else {
        0
    };
    let above = if y > 0 {
        neighbor_value(map, map.index(p, y - 1, x), known)
    } else {
        0
    };
    let plane = if p > 0 {
        neighbor_value(map, map.index(p - 1, y, x), known)
    } else {
        0
    };
    (match kind {
        ContextKind::Bitmap2d => left + 2 * above,
        ContextKind::Bitmap3d => left + 2 * above + 4 * plane,
        ContextKind::Nominal => left + 4 * above,
        ContextKind::Ordinal => residual_bin(left + above) as u32,
    }) as usize
}

/// Context id of every cell with the whole map known.
pub fn full_contexts(map: &DataMap) -> Vec<u8> {
    let kind = map.kind().context_kind();
    let [dp, dy, dx] = map.dims();
    let mut out = Vec::with_capacity(map.len());
    for p in 0..dp {
        for y in 0..dy {
            for x in 0..dx {
                out.push(context_of(map, kind, p, y, x, None) as u8);
            }
        }
    }
    out
}
