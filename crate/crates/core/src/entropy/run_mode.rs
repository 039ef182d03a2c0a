//! Run-length residual coding: zero runs and non-zero ranks, both with
//! order-0 Exp-Golomb codes, over a map's cells in raster order.

use super::bits::{BitReader, BitWriter};
use super::golomb::{read_ue, ue_len, write_ue};
use crate::error::Result;

/// Tokens as `(run, value)` pairs; the final pair may have no value.
fn tokens(values: &[u32]) -> Vec<(u32, Option<u32>)> {
    let mut out = Vec::new();
    let mut i = 0;
    if values.is_empty() {
        return out;
    }
    loop {
        let start = i;
        while i < values.len() && values[i] == 0 {
            i += 1;
        }
        let run = (i - start) as u32;
        if i == values.len() {
            out.push((run, None));
            break;
        }
        out.push((run, Some(values[i])));
        i += 1;
        if i == values.len() {
            break;
        }
    }
    out
}

/// Bits [`encode`] would write.
pub fn encoded_len(values: &[u32]) -> usize {
    tokens(values)
        .iter()
        .map(|&(run, v)| (ue_len(run) + v.map_or(0, |v| ue_len(v - 1))) as usize)
        .sum()
}

pub fn encode(w: &mut BitWriter, values: &[u32]) {
    for (run, v) in tokens(values) {
        write_ue(w, run);
        if let Some(v) = v {
            write_ue(w, v - 1);
        }
    }
}

/// Decodes `count` values, each checked against `max_value`.
pub fn decode(r: &mut BitReader, count: usize, max_value: u32) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let run = read_ue(r)? as usize;
        if run > count - out.len() {
            return Err(r.error("zero run overruns the map"));
        }
        out.resize(out.len() + run, 0);
        if out.len() == count {
            break;
        }
        let v = read_ue(r)?.checked_add(1).filter(|&v| v <= max_value);
        match v {
            Some(v) => out.push(v),
            None => return Err(r.error("run-mode value out of range")),
        }
    }
    Ok(out)
}
