//! Bit-level entropy coders.

pub mod bits;
pub mod golomb;
pub mod range;
pub mod run_mode;
pub mod tree_code;

pub use bits::{BitReader, BitWriter};
pub use range::{AdaptiveModel, ContextModels, RangeDecoder, RangeEncoder};
pub use tree_code::{MapClass, NodeKind};
