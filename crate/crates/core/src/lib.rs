//! Lossless and near-lossless depth-map sequence coding with quad-tree
//! prediction, rank-mapped spatial quantisation, and binary-tree
//! decomposition of frame-level data maps.

pub mod analysis;
pub mod btbd;
pub mod codec;
pub mod entropy;
pub mod error;
pub mod frame;
pub mod prediction;
pub mod quant;
pub mod rdo;
pub mod synth;
pub mod syntax;

pub use analysis::{bd_metrics, sequence_stats, tsg_mse, BdMetrics, RdPoint, SequenceStats};
pub use codec::{decode_sequence, encode_sequence, CodedStream, DecodedStream, EncodeReport, EncoderConfig};
pub use error::{Error, Result};
pub use frame::{DepthFrame, Sequence};
pub use quant::QuantConfig;
pub use synth::{generate, SceneSpec};
