//! Sequence encoder. GOPs are independent and are encoded in parallel;
//! frames inside a GOP form a reference chain.

use rayon::prelude::*;

use super::header::{StreamHeader, HEADER_LEN};
use super::map_coding::{encode_map, MapCodingReport};
use super::mv_coding::{encode_mvs, MvCodingReport};
use crate::btbd::MapKind;
use crate::entropy::BitWriter;
use crate::error::{Error, Result};
use crate::frame::{DepthFrame, Sequence};
use crate::prediction::{MotionVector, PredictionMode};
use crate::quant::QuantConfig;
use crate::rdo::{decide_frame, FrameContext};
use crate::syntax::form_maps;

pub const DEFAULT_SEARCH_WIDTH: u32 = 32;
pub const DEFAULT_GOP: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    pub quant: QuantConfig,
    pub search_width: u32,
    /// Distance between intra frames.
    pub gop: u32,
}

impl EncoderConfig {
    pub fn new(q: u32) -> Result<Self> {
        Ok(Self {
            quant: QuantConfig::new(q)?,
            search_width: DEFAULT_SEARCH_WIDTH,
            gop: DEFAULT_GOP,
        })
    }

    pub fn with_search_width(mut self, search_width: u32) -> Self {
        self.search_width = search_width;
        self
    }

    pub fn with_gop(mut self, gop: u32) -> Self {
        self.gop = gop;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(1..=255).contains(&self.search_width) {
            return Err(Error::Input(format!("search width {} not in 1..=255", self.search_width)));
        }
        if !(1..=255).contains(&self.gop) {
            return Err(Error::Input(format!("GOP period {} not in 1..=255", self.gop)));
        }
        Ok(())
    }
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self::new(1).expect("lossless config")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameType {
    Intra,
    Predicted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameReport {
    pub index: usize,
    pub frame_type: FrameType,
    /// Payload bits including alignment padding.
    pub bits: usize,
    pub maps: Vec<MapCodingReport>,
    pub mv: Option<MvCodingReport>,
    /// CUs per mode, indexed by mode code.
    pub mode_counts: [usize; 4],
    /// Coded residual cells and how many of them had rank 0.
    pub residual_cells: usize,
    pub zero_ranks: usize,
}

impl FrameReport {
    pub fn map(&self, kind: MapKind) -> Option<&MapCodingReport> {
        self.maps.iter().find(|m| m.kind == kind)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeReport {
    pub header: StreamHeader,
    pub frames: Vec<FrameReport>,
    pub total_bits: usize,
}

impl EncodeReport {
    /// Proportion of rank-0 residuals over all coded residual cells.
    pub fn zero_proportion(&self) -> Option<f64> {
        let cells: usize = self.frames.iter().map(|f| f.residual_cells).sum();
        let zeros: usize = self.frames.iter().map(|f| f.zero_ranks).sum();
        (cells > 0).then(|| zeros as f64 / cells as f64)
    }

    /// Bits per original pixel over the whole stream.
    pub fn bpp(&self) -> f64 {
        let px = usize::from(self.header.original_width) * usize::from(self.header.original_height) * self.frames.len();
        self.total_bits as f64 / px as f64
    }
}

/// Encoded stream with the encoder's own reconstructions.
#[derive(Clone, Debug)]
pub struct CodedStream {
    pub bytes: Vec<u8>,
    pub report: EncodeReport,
    /// Padded reconstructions, one per frame.
    pub reconstructions: Vec<DepthFrame>,
}

struct CodedFrame {
    bytes: Vec<u8>,
    report: FrameReport,
    recon: DepthFrame,
}

/// Encodes one frame; `reference` is `None` for intra frames.
fn encode_frame(index: usize, current: &DepthFrame, reference: Option<&DepthFrame>, config: &EncoderConfig) -> CodedFrame {
    let ctx = FrameContext {
        current,
        reference,
        quant: config.quant,
        search_width: config.search_width as i32,
    };
    let decisions = decide_frame(&ctx);
    let (w, h) = (current.width(), current.height());
    let maps = form_maps(&decisions, w, h, config.quant.q());
    let mut out = BitWriter::new();
    out.write_bit(reference.is_some());
    let mut reports = Vec::with_capacity(6);
    for kind in MapKind::ALL {
        if kind == MapKind::Mvz && reference.is_none() {
            continue;
        }
        reports.push(encode_map(&mut out, maps.get(kind)));
    }
    let leaves = decisions.leaves();
    let moving: Vec<(crate::frame::CuRect, MotionVector)> = leaves
        .iter()
        .filter(|l| l.mode == PredictionMode::InterM)
        .map(|l| (l.rect, l.mv))
        .collect();
    let mv = (!moving.is_empty()).then(|| encode_mvs(&mut out, &moving, w, h, config.search_width));
    out.align();
    let mut mode_counts = [0usize; 4];
    leaves.iter().for_each(|l| mode_counts[l.mode.code() as usize] += 1);
    let residual_cells = maps.residual.coded_cells();
    let nonzero = (0..maps.residual.len()).filter(|&i| maps.residual.get(i).is_some_and(|v| v > 0)).count();
    CodedFrame {
        report: FrameReport {
            index,
            frame_type: if reference.is_some() { FrameType::Predicted } else { FrameType::Intra },
            bits: out.len(),
            maps: reports,
            mv,
            mode_counts,
            residual_cells,
            zero_ranks: residual_cells - nonzero,
        },
        bytes: out.into_bytes(),
        recon: decisions.recon,
    }
}

fn encode_gop(start: usize, frames: &[DepthFrame], config: &EncoderConfig) -> Vec<CodedFrame> {
    let mut out: Vec<CodedFrame> = Vec::with_capacity(frames.len());
    for (k, f) in frames.iter().enumerate() {
        let reference = out.last().filter(|_| k > 0).map(|c| &c.recon);
        let coded = encode_frame(start + k, f, reference, config);
        out.push(coded);
    }
    out
}

pub fn encode_sequence(seq: &Sequence, config: &EncoderConfig) -> Result<CodedStream> {
    config.validate()?;
    let narrow = |v: usize, what: &str| u16::try_from(v).map_err(|_| Error::Input(format!("{what} {v} exceeds 65535")));
    let header = StreamHeader {
        padded_width: narrow(seq.padded_width(), "width")?,
        padded_height: narrow(seq.padded_height(), "height")?,
        original_width: narrow(seq.original_width, "width")?,
        original_height: narrow(seq.original_height, "height")?,
        frame_count: u32::try_from(seq.len()).map_err(|_| Error::input("too many frames"))?,
        q: config.quant.q() as u8,
        search_width: config.search_width as u8,
        gop: config.gop as u8,
    };
    if let Some(msg) = header.problem() {
        return Err(Error::input(msg));
    }
    let gop = config.gop as usize;
    let coded: Vec<CodedFrame> = seq
        .frames
        .par_chunks(gop)
        .enumerate()
        .map(|(g, frames)| encode_gop(g * gop, frames, config))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let mut bytes = Vec::with_capacity(HEADER_LEN + coded.iter().map(|c| c.bytes.len()).sum::<usize>());
    bytes.extend_from_slice(&header.to_bytes());
    let mut frames = Vec::with_capacity(coded.len());
    let mut reconstructions = Vec::with_capacity(coded.len());
    for c in coded {
        bytes.extend_from_slice(&c.bytes);
        frames.push(c.report);
        reconstructions.push(c.recon);
    }
    let report = EncodeReport {
        header,
        frames,
        total_bits: bytes.len() * 8,
    };
    Ok(CodedStream {
        bytes,
        report,
        reconstructions,
    })
}
