//! Spatial-domain scalar quantisation and rank mapping of residuals.
//!
//! A residual `ε` is quantised with step `Q = 2D+1` to `ε_Q = ⌈ε/Q⌋`. The
//! quantised residual is then mapped to an unsigned rank that orders the
//! residuals valid for the current prediction by magnitude, interleaving
//! positive (even ranks) and negative (odd ranks) values until the shorter
//! side runs out and continuing linearly on the longer side. The rank domain
//! is `[0, ⌈255/Q⌋]`, the same size as the quantised sample domain.

use crate::error::{Error, Result};

/// Quantiser step `q = 2d + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuantConfig {
    q: u32,
    d: u32,
}

impl QuantConfig {
    pub const LOSSLESS: QuantConfig = QuantConfig { q: 1, d: 0 };

    /// Accepts odd steps in `1..=15`.
    pub fn new(q: u32) -> Result<Self> {
        if q.is_multiple_of(2) {
            return Err(Error::input("q must be odd"));
        }
        if !(1..=15).contains(&q) {
            return Err(Error::input(format!("q={q} outside supported range 1..=15")));
        }
        Ok(Self { q, d: (q - 1) / 2 })
    }

    #[inline]
    pub fn q(self) -> u32 {
        self.q
    }

    /// Maximum per-sample reconstruction error.
    #[inline]
    pub fn d(self) -> u32 {
        self.d
    }

    /// Largest rank, `⌈255/Q⌋`.
    #[inline]
    pub fn rank_max(self) -> u32 {
        round_div(255, self.q) as u32
    }

    /// Quantised prediction `⌈x̂/Q⌋`.
    #[inline]
    pub fn quantize_prediction(self, prediction: u8) -> i32 {
        round_div(i32::from(prediction), self.q)
    }

    /// Sample reconstructed from a quantised prediction and quantised residual.
    #[inline]
    pub fn reconstruct(self, prediction_q: i32, residual_q: i32) -> u8 {
        (self.q as i32 * (prediction_q + residual_q)).clamp(0, 255) as u8
    }

    /// Encoder-side residual coding of one sample: returns the rank and the
    /// reconstructed sample. The prediction is taken on the quantisation grid
    /// (`Q·⌈x̂/Q⌋`) so every achievable quantised residual lies inside the
    /// rank map's domain.
    pub fn code_sample(self, original: u8, prediction: u8) -> (u32, u8) {
        let pq = self.quantize_prediction(prediction);
        let eps = i32::from(original) - self.q as i32 * pq;
        let eq = quantize(eps, self.q);
        let rank = rank_map(eq, pq, self.rank_max() as i32)
            .expect("grid-aligned prediction keeps residual inside the rank domain");
        (rank, self.reconstruct(pq, eq))
    }

    /// Decoder-side inverse of [`QuantConfig::code_sample`].
    pub fn decode_sample(self, rank: u32, prediction: u8) -> u8 {
        let pq = self.quantize_prediction(prediction);
        let eq = rank_unmap(rank, pq, self.rank_max() as i32);
        self.reconstruct(pq, eq)
    }
}

/// Nearest-integer `x / q` with ties rounded away from zero.
#[inline]
pub fn round_div(x: i32, q: u32) -> i32 {
    let q = q as i32;
    let m = (x.abs() + q / 2) / q;
    if x < 0 {
        -m
    } else {
        m
    }
}

#[inline]
pub fn quantize(residual: i32, q: u32) -> i32 {
    round_div(residual, q)
}

#[inline]
pub fn dequantize(residual_q: i32, q: u32) -> i32 {
    residual_q * q as i32
}

/// Rank of `residual_q` among `{-pred_q, …, rank_max - pred_q}` ordered by
/// magnitude.
pub fn rank_map(residual_q: i32, pred_q: i32, rank_max: i32) -> Result<u32> {
    if pred_q < 0 || pred_q > rank_max {
        return Err(Error::input(format!(
            "quantised prediction {pred_q} outside [0,{rank_max}]"
        )));
    }
    if residual_q < -pred_q || residual_q > rank_max - pred_q {
        return Err(Error::input(format!(
            "residual {residual_q} not valid for prediction {pred_q} (range bound {rank_max})"
        )));
    }
    let shorter = pred_q.min(rank_max - pred_q);
    let mag = residual_q.abs();
    let rank = if mag <= shorter {
        if residual_q >= 0 {
            2 * residual_q
        } else {
            -2 * residual_q - 1
        }
    } else {
        shorter + mag
    };
    Ok(rank as u32)
}

/// Inverse of [`rank_map`]. `rank` must lie in `[0, rank_max]`.
pub fn rank_unmap(rank: u32, pred_q: i32, rank_max: i32) -> i32 {
    debug_assert!(rank as i32 <= rank_max);
    let rank = rank as i32;
    let shorter = pred_q.min(rank_max - pred_q);
    if rank <= 2 * shorter {
        if rank % 2 == 0 {
            rank / 2
        } else {
            -(rank + 1) / 2
        }
    } else {
        let mag = rank - shorter;
        // past the interleaved zone only the longer side has values left
        if pred_q < rank_max - pred_q {
            mag
        } else {
            -mag
        }
    }
}
