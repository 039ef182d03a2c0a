//! Sequence decoder.

use super::encoder::FrameType;
use super::header::{StreamHeader, HEADER_LEN};
use super::map_coding::decode_map;
use super::mv_coding::{decode_mvs, MotionCu};
use crate::btbd::MapKind;
use crate::entropy::BitReader;
use crate::error::{Error, Result};
use crate::frame::{CuRect, DepthFrame, Sequence, MIN_CU_SIZE};
use crate::prediction::{intra_predict_cu, motion_compensate, MotionVector, PredictionMode, ReconFrame};
use crate::syntax::{div_template, leaves_from_division, mode_template, mvz_template, residual_template};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameDecodeInfo {
    pub index: usize,
    pub frame_type: FrameType,
    /// Bits consumed including alignment padding.
    pub bits: usize,
    pub mode_counts: [usize; 4],
    /// Coded residual cells and how many of them had rank 0.
    pub residual_cells: usize,
    pub zero_ranks: usize,
}

impl DecodedStream {
    /// Proportion of rank-0 residuals over all coded residual cells.
    pub fn zero_proportion(&self) -> Option<f64> {
        let cells: usize = self.frames.iter().map(|f| f.residual_cells).sum();
        let zeros: usize = self.frames.iter().map(|f| f.zero_ranks).sum();
        (cells > 0).then(|| zeros as f64 / cells as f64)
    }
}

#[derive(Clone, Debug)]
pub struct DecodedStream {
    pub header: StreamHeader,
    /// Padded frames with the original size recorded.
    pub sequence: Sequence,
    pub frames: Vec<FrameDecodeInfo>,
}

pub fn decode_sequence(bytes: &[u8]) -> Result<DecodedStream> {
    let header = StreamHeader::parse(bytes)?;
    let mut r = BitReader::new(&bytes[HEADER_LEN..]);
    let mut frames: Vec<DepthFrame> = Vec::new();
    let mut infos = Vec::new();
    for t in 0..header.frame_count as usize {
        let offset = HEADER_LEN * 8;
        let reference = if header.is_intra(t) { None } else { frames.last() };
        let (frame, info) = decode_frame(&mut r, &header, t, reference).map_err(|e| match e {
            Error::Decode { bit, msg } => Error::Decode {
                bit: bit + offset,
                msg: format!("frame {t}: {msg}"),
            },
            other => other,
        })?;
        frames.push(frame);
        infos.push(info);
    }
    if r.remaining() > 0 {
        return Err(Error::decode(HEADER_LEN * 8 + r.position(), "trailing data after last frame"));
    }
    Ok(DecodedStream {
        header,
        sequence: Sequence {
            frames,
            frame_rate: 25.0,
            original_width: usize::from(header.original_width),
            original_height: usize::from(header.original_height),
        },
        frames: infos,
    })
}

/// Decodes frame `index` starting at the reader's byte-aligned position.
/// `reference` must be the previous reconstruction for predicted frames.
pub fn decode_frame(r: &mut BitReader, header: &StreamHeader, index: usize, reference: Option<&DepthFrame>) -> Result<(DepthFrame, FrameDecodeInfo)> {
    let start = r.position();
    let (w, h) = (usize::from(header.padded_width), usize::from(header.padded_height));
    let quant = header.quant();
    let predicted = r.read_bit()?;
    if predicted == header.is_intra(index) {
        return Err(r.error("frame type contradicts the GOP structure"));
    }
    let reference = if predicted {
        let f = reference.ok_or_else(|| r.error("predicted frame without a reference"))?;
        if f.width() != w || f.height() != h {
            return Err(Error::Dimension("reference frame size differs from header".into()));
        }
        Some(f)
    } else {
        None
    };

    let div64 = decode_map(r, div_template(MapKind::Div64, w, h, None))?;
    let div32 = decode_map(r, div_template(MapKind::Div32, w, h, Some(&div64)))?;
    let div16 = decode_map(r, div_template(MapKind::Div16, w, h, Some(&div32)))?;
    let leaves = leaves_from_division(&div64, &div32, &div16, w, h).map_err(|_| r.error("division maps incomplete"))?;

    let mode_map = decode_map(r, mode_template(&leaves, w, h))?;
    let gw = w / MIN_CU_SIZE;
    let mut modes = Vec::with_capacity(leaves.len());
    for l in &leaves {
        let code = mode_map.symbol((l.row / MIN_CU_SIZE) * gw + l.col / MIN_CU_SIZE);
        let mode = PredictionMode::from_code(code as u8).ok_or_else(|| r.error(format!("invalid mode code {code}")))?;
        if !predicted && mode != PredictionMode::Intra {
            return Err(r.error("inter mode in an intra frame"));
        }
        modes.push(mode);
    }

    let mvz = if predicted {
        Some(decode_map(r, mvz_template(&leaves, &modes, w, h))?)
    } else {
        None
    };
    let residual = decode_map(r, residual_template(&leaves, &modes, w, h, quant.q(), quant.rank_max()))?;

    let mut moving = Vec::new();
    if let Some(mvz) = &mvz {
        for (l, &m) in leaves.iter().zip(&modes) {
            if m == PredictionMode::InterM {
                let (y, x) = (l.row / MIN_CU_SIZE, l.col / MIN_CU_SIZE);
                let nonzero = [mvz.symbol(mvz.index(0, y, x)) == 1, mvz.symbol(mvz.index(1, y, x)) == 1];
                if nonzero == [false, false] {
                    return Err(r.error("InterM CU with a zero motion vector"));
                }
                moving.push(MotionCu { rect: *l, nonzero });
            }
        }
    }
    let omega = u32::from(header.search_width);
    let mvs = if moving.is_empty() {
        Vec::new()
    } else {
        decode_mvs(r, &moving, w, h, omega)?
    };
    for (cu, mv) in moving.iter().zip(&mvs) {
        if !mv.block_in_bounds(cu.rect.row, cu.rect.col, cu.rect.size, w, h) {
            return Err(r.error(format!("motion vector ({}, {}) leaves the frame", mv.x, mv.y)));
        }
    }
    r.align();

    let mut recon = ReconFrame::new(w, h);
    let mut mv_iter = mvs.into_iter();
    let rank_at = |row: usize, col: usize| residual.symbol(row * w + col);
    let mut mode_counts = [0usize; 4];
    for (&rect, &mode) in leaves.iter().zip(&modes) {
        mode_counts[mode.code() as usize] += 1;
        match mode {
            PredictionMode::Intra => {
                intra_predict_cu(&mut recon, rect, |row, col, pred| quant.decode_sample(rank_at(row, col), pred));
            }
            _ => {
                let reference = reference.expect("inter modes only in predicted frames");
                let mv = if mode == PredictionMode::InterM {
                    mv_iter.next().unwrap_or(MotionVector::ZERO)
                } else {
                    MotionVector::ZERO
                };
                let pred = motion_compensate(reference, rect, mv);
                let block = reconstruct_inter(&pred, rect, mode, quant, &rank_at);
                recon.put_block(rect, &block);
            }
        }
    }
    Ok((
        recon.into_frame(),
        FrameDecodeInfo {
            index,
            frame_type: if predicted { FrameType::Predicted } else { FrameType::Intra },
            bits: r.position() - start,
            mode_counts,
            residual_cells: residual.coded_cells(),
            zero_ranks: (0..residual.len()).filter(|&i| residual.get(i) == Some(0)).count(),
        },
    ))
}

fn reconstruct_inter(pred: &[u8], rect: CuRect, mode: PredictionMode, quant: crate::quant::QuantConfig, rank_at: &impl Fn(usize, usize) -> u32) -> Vec<u8> {
    let s = rect.size;
    (0..s * s)
        .map(|k| {
            let rank = if mode == PredictionMode::Skip {
                0
            } else {
                rank_at(rect.row + k / s, rect.col + k % s)
            };
            quant.decode_sample(rank, pred[k])
        })
        .collect()
}
