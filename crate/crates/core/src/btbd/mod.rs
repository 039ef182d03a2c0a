//! Data maps, context modelling, code-length estimation, and greedy
//! binary-tree decomposition.

pub mod context;
pub mod estimate;
pub mod map;
pub mod partition;

pub use estimate::{estimate_code_length, Estimator, Histogram};
pub use map::{ContextKind, DataMap, MapKind, Region, RegionContent};
pub use partition::{btbd, Axis, Leaf, PartitionTree, Partitioner};
