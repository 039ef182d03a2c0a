//! Adaptive multi-symbol arithmetic coding (carry-less range coder).
//!
//! The coder keeps 32-bit `low`/`range` registers and renormalises one byte
//! at a time. Bytes go straight into a [`BitWriter`] so arithmetic-coded
//! segments can sit between fixed-length fields at any bit offset. The
//! decoder consumes exactly as many bytes as the encoder produced (4 on
//! start-up plus one per renormalisation, matched by a 4-byte flush), which
//! leaves the reader positioned at the first bit after the segment.

use super::bits::{BitReader, BitWriter};
use crate::error::Result;

const TOP: u32 = 1 << 24;
const BOT: u32 = 1 << 16;

/// Total frequency above which every count is halved.
pub const RESCALE_CAP: u32 = 1 << 13;

/// Count added to a symbol each time it is coded.
pub const ADAPT_INCREMENT: u32 = 1;

/// Per-context adaptive frequency table over `[0, symbols)`, initialised to
/// all-ones. Cumulative counts come from a Fenwick tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveModel {
    freq: Vec<u32>,
    tree: Vec<u32>,
    total: u32,
}

impl AdaptiveModel {
    pub fn new(symbols: usize) -> Self {
        assert!(symbols >= 1 && symbols as u32 <= RESCALE_CAP / 2, "alphabet of {symbols} symbols");
        let mut m = Self {
            freq: vec![1; symbols],
            tree: vec![0; symbols + 1],
            total: 0,
        };
        m.rebuild();
        m
    }

    pub fn symbols(&self) -> usize {
        self.freq.len()
    }

    pub fn frequencies(&self) -> &[u32] {
        &self.freq
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    fn rebuild(&mut self) {
        let n = self.freq.len();
        self.tree.iter_mut().for_each(|t| *t = 0);
        for i in 0..n {
            let j = i + 1;
            self.tree[j] += self.freq[i];
            let parent = j + (j & j.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[j];
            }
        }
        self.total = self.freq.iter().sum();
    }

    /// Sum of frequencies of symbols `< s`.
    fn cumulative(&self, s: usize) -> u32 {
        let mut i = s;
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    /// Symbol whose cumulative interval contains `target`, with its start.
    fn find(&self, target: u32) -> (usize, u32) {
        let n = self.freq.len();
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        (pos, target - rem)
    }

    fn update(&mut self, s: usize) {
        self.freq[s] += ADAPT_INCREMENT;
        self.total += ADAPT_INCREMENT;
        if self.total > RESCALE_CAP {
            for f in &mut self.freq {
                *f = (*f).div_ceil(2);
            }
            self.rebuild();
        } else {
            let n = self.freq.len();
            let mut i = s + 1;
            while i <= n {
                self.tree[i] += ADAPT_INCREMENT;
                i += i & i.wrapping_neg();
            }
        }
    }

    /// Ideal code length of `s` under the current table, in bits.
    pub fn cost(&self, s: usize) -> f64 {
        (f64::from(self.total) / f64::from(self.freq[s])).log2()
    }
}

pub struct RangeEncoder<'w> {
    out: &'w mut BitWriter,
    low: u32,
    range: u32,
}

impl<'w> RangeEncoder<'w> {
    pub fn new(out: &'w mut BitWriter) -> Self {
        Self {
            out,
            low: 0,
            range: u32::MAX,
        }
    }

    pub fn encode(&mut self, model: &mut AdaptiveModel, symbol: usize) {
        let cum = model.cumulative(symbol);
        let freq = model.freq[symbol];
        self.range /= model.total;
        self.low = self.low.wrapping_add(cum * self.range);
        self.range *= freq;
        self.normalize();
        model.update(symbol);
    }

    fn normalize(&mut self) {
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.out.write_bits(u64::from(self.low >> 24), 8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    pub fn finish(self) {
        let mut low = self.low;
        for _ in 0..4 {
            self.out.write_bits(u64::from(low >> 24), 8);
            low <<= 8;
        }
    }
}

pub struct RangeDecoder<'r, 'a> {
    input: &'r mut BitReader<'a>,
    low: u32,
    range: u32,
    code: u32,
}

impl<'r, 'a> RangeDecoder<'r, 'a> {
    pub fn new(input: &'r mut BitReader<'a>) -> Result<Self> {
        let code = input.read_bits(32)? as u32;
        Ok(Self {
            input,
            low: 0,
            range: u32::MAX,
            code,
        })
    }

    pub fn decode(&mut self, model: &mut AdaptiveModel) -> Result<usize> {
        self.range /= model.total;
        let target = self.code.wrapping_sub(self.low) / self.range;
        if target >= model.total {
            return Err(self.input.error("arithmetic code value out of range"));
        }
        let (s, cum) = model.find(target);
        self.low = self.low.wrapping_add(cum * self.range);
        self.range *= model.freq[s];
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.code = (self.code << 8) | self.input.read_bits(8)? as u32;
            self.low <<= 8;
            self.range <<= 8;
        }
        model.update(s);
        Ok(s)
    }

    /// Ends the segment. The encoder's 4-byte flush is what the decoder
    /// pre-loaded, so nothing more is consumed.
    pub fn finish(self) {}
}

/// Bank of independent adaptive tables, one per context id.
#[derive(Clone, Debug)]
pub struct ContextModels {
    models: Vec<AdaptiveModel>,
}

impl ContextModels {
    pub fn new(contexts: usize, symbols: usize) -> Self {
        Self {
            models: vec![AdaptiveModel::new(symbols); contexts],
        }
    }

    #[inline]
    pub fn get(&mut self, ctx: usize) -> &mut AdaptiveModel {
        &mut self.models[ctx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roundtrip(symbols: &[usize], alphabet: usize, contexts: &[usize], k: usize) -> usize {
        let mut w = BitWriter::new();
        w.write_str("101");
        let mut enc_models = ContextModels::new(k, alphabet);
        {
            let mut enc = RangeEncoder::new(&mut w);
            for (&s, &c) in symbols.iter().zip(contexts) {
                enc.encode(enc_models.get(c), s);
            }
            enc.finish();
        }
        w.write_str("0110");
        let bits = w.len() - 7;
        let mut r = BitReader::new(w.as_bytes());
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
        let mut dec_models = ContextModels::new(k, alphabet);
        {
            let mut dec = RangeDecoder::new(&mut r).unwrap();
            for (&s, &c) in symbols.iter().zip(contexts) {
                assert_eq!(dec.decode(dec_models.get(c)).unwrap(), s);
            }
            dec.finish();
        }
        for c in 0..k {
            assert_eq!(dec_models.get(c), enc_models.get(c));
        }
        assert_eq!(r.read_bits(4).unwrap(), 0b0110);
        bits
    }

    #[test]
    fn roundtrip_random_symbols_various_alphabets() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for alphabet in [1usize, 2, 3, 17, 256] {
            let n = 100_000;
            let syms: Vec<usize> = (0..n).map(|_| rng.gen_range(0..alphabet)).collect();
            let ctx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            roundtrip(&syms, alphabet, &ctx, 4);
        }
    }

    #[test]
    fn encoder_and_decoder_tables_agree_after_every_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let syms: Vec<usize> = (0..3000).map(|_| rng.gen_range(0..9usize).min(rng.gen_range(0..9))).collect();
        let mut w = BitWriter::new();
        let mut em = AdaptiveModel::new(9);
        let mut trace = Vec::new();
        {
            let mut enc = RangeEncoder::new(&mut w);
            for &s in &syms {
                enc.encode(&mut em, s);
                trace.push(em.clone());
            }
            enc.finish();
        }
        let mut r = BitReader::new(w.as_bytes());
        let mut dm = AdaptiveModel::new(9);
        let mut dec = RangeDecoder::new(&mut r).unwrap();
        for (i, &s) in syms.iter().enumerate() {
            assert_eq!(dec.decode(&mut dm).unwrap(), s);
            assert_eq!(dm, trace[i], "diverged after symbol {i}");
        }
    }

    #[test]
    fn single_symbol_alphabet_costs_only_the_flush() {
        let syms = vec![0usize; 5000];
        let ctx = vec![0usize; 5000];
        assert_eq!(roundtrip(&syms, 1, &ctx, 1), 32);
    }

    #[test]
    fn skewed_binary_source_near_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let syms: Vec<usize> = (0..n).map(|_| usize::from(rng.gen_bool(0.1))).collect();
        let ones = syms.iter().filter(|&&s| s == 1).count() as f64;
        let p1 = ones / n as f64;
        let h = -(p1 * p1.log2() + (1.0 - p1) * (1.0 - p1).log2());
        let bits = roundtrip(&syms, 2, &vec![0; n], 1) as f64;
        let bound = n as f64 * h + 0.5 * (n as f64).log2() + 32.0;
        assert!(bits <= 1.05 * bound, "bits={bits} bound={bound}");
        assert!(bits >= 0.95 * n as f64 * h);
    }

    #[test]
    fn fenwick_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = AdaptiveModel::new(37);
        for _ in 0..5000 {
            let s = rng.gen_range(0..37);
            m.update(s);
            let lin: u32 = m.freq[..s].iter().sum();
            assert_eq!(m.cumulative(s), lin);
            let t = rng.gen_range(0..m.total);
            let (f, start) = m.find(t);
            assert!(start <= t && t < start + m.freq[f]);
            assert_eq!(m.total, m.freq.iter().sum::<u32>());
        }
    }
}
