//! Bitstream layer: header, map and motion-vector coding, and the
//! sequence encoder and decoder.

pub mod decoder;
pub mod encoder;
pub mod header;
pub mod map_coding;
pub mod mv_coding;

pub use decoder::{decode_frame, decode_sequence, DecodedStream, FrameDecodeInfo};
pub use encoder::{encode_sequence, CodedStream, EncodeReport, EncoderConfig, FrameReport, FrameType};
pub use header::StreamHeader;
pub use map_coding::{decode_map, encode_map, MapCodingMode, MapCodingReport};
pub use mv_coding::{decode_mvs, encode_mvs, MotionCu, MvCodingMode, MvCodingReport};
