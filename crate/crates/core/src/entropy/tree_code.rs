//! Fixed Huffman codes for partition-tree nodes.

use super::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};

/// Binary maps (symbols 0/1) and integer maps use different code tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MapClass {
    Bitmap,
    Intmap,
}

/// Node of a partition tree as seen by the tree coder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// All zeros.
    LeafZero,
    /// All one identical non-zero value.
    LeafSame,
    /// Mixed content.
    LeafMixed,
    SplitX,
    SplitY,
    SplitP,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::LeafZero,
        NodeKind::LeafSame,
        NodeKind::LeafMixed,
        NodeKind::SplitX,
        NodeKind::SplitY,
        NodeKind::SplitP,
    ];
}

/// Codeword of `kind` for maps of `class`. Plane splits have no intmap code.
pub fn codeword(kind: NodeKind, class: MapClass) -> Result<&'static str> {
    use NodeKind::*;
    Ok(match (class, kind) {
        (MapClass::Bitmap, LeafZero) => "00",
        (MapClass::Bitmap, LeafSame) => "1000",
        (MapClass::Bitmap, LeafMixed) => "101",
        (MapClass::Bitmap, SplitX) => "11",
        (MapClass::Bitmap, SplitY) => "01",
        (MapClass::Bitmap, SplitP) => "1001",
        (MapClass::Intmap, LeafZero) => "001",
        (MapClass::Intmap, LeafSame) => "000",
        (MapClass::Intmap, LeafMixed) => "01",
        (MapClass::Intmap, SplitX) => "11",
        (MapClass::Intmap, SplitY) => "10",
        (MapClass::Intmap, SplitP) => return Err(Error::input("plane split has no intmap code")),
    })
}

/// Length of the codeword in bits.
pub fn code_len(kind: NodeKind, class: MapClass) -> Result<u32> {
    codeword(kind, class).map(|c| c.len() as u32)
}

pub fn write_node(w: &mut BitWriter, kind: NodeKind, class: MapClass) -> Result<()> {
    w.write_str(codeword(kind, class)?);
    Ok(())
}

pub fn read_node(r: &mut BitReader, class: MapClass) -> Result<NodeKind> {
    let mut prefix = String::with_capacity(4);
    while prefix.len() < 4 {
        prefix.push(if r.read_bit()? { '1' } else { '0' });
        for kind in NodeKind::ALL {
            if codeword(kind, class).is_ok_and(|c| c == prefix) {
                return Ok(kind);
            }
        }
    }
    Err(r.error(format!("invalid partition-tree node code {prefix}")))
}
