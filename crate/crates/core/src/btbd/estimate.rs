//! Code-length estimation for context-adaptive arithmetic coding: static
//! zero-order entropy per context plus a model-cost term for the implicit
//! cost of learning each context's distribution.

use super::context::full_contexts;
use super::map::{DataMap, Region};

/// Above this value of the geometric parameter the free-parameter count is
/// not reduced.
pub fn p_hat_threshold(bound: u32) -> f64 {
    2f64.powf((1.0 - f64::from(bound + 1).log2()) / 2.0)
}

/// Method-of-moments geometric parameter from count `n`, first moment
/// `s1 = Σ j·n_j` and second moment `s2 = Σ j²·n_j`, before clamping.
pub fn p_hat_raw(n: f64, s1: f64, s2: f64, bound: u32) -> Option<f64> {
    let r = f64::from(bound);
    let num = (r + 2.0) * n - 2.0 * s1;
    let den = (r + 1.0) * s1 - s2;
    (den != 0.0).then(|| num / den)
}

/// Geometric parameter clamped to `(0, 1]`; a zero denominator (all mass at
/// symbol 0) gives 1.
pub fn p_hat(n: f64, s1: f64, s2: f64, bound: u32) -> f64 {
    match p_hat_raw(n, s1, s2, bound) {
        None => 1.0,
        Some(p) if p.is_nan() => 1.0,
        Some(p) => p.clamp(f64::MIN_POSITIVE, 1.0),
    }
}

/// Effective number of free parameters, clamped to `[1, bound]`.
pub fn free_parameters(n: u64, bound: u32, p_hat: f64) -> f64 {
    let r = f64::from(bound);
    let exponent = (r + 1.0) / (n as f64).log2() * (p_hat_threshold(bound) - p_hat);
    (r / 2f64.powf(exponent)).clamp(1.0, r)
}

/// Model cost in bits of a context holding `n` symbols over `[0, bound]`.
pub fn model_cost(n: u64, bound: u32, p_hat: f64) -> f64 {
    if n <= 1 || bound == 0 {
        return 0.0;
    }
    let log_n = (n as f64).log2();
    if bound == 1 {
        return 0.5 * log_n;
    }
    free_parameters(n, bound, p_hat) / 2.0 * log_n
}

#[inline]
fn n_log_n(n: u64) -> f64 {
    if n <= 1 {
        0.0
    } else {
        let f = n as f64;
        f * f.log2()
    }
}

/// Rounds a bit total up, tolerating float noise just above an integer.
#[inline]
pub fn ceil_bits(bits: f64) -> u64 {
    (bits - 1e-9).ceil().max(0.0) as u64
}

/// Per-context symbol counts with moments, cleared in time proportional to
/// the number of distinct entries used.
#[derive(Clone, Debug)]
pub struct Histogram {
    contexts: usize,
    symbols: usize,
    bound: u32,
    counts: Vec<u32>,
    touched: Vec<u32>,
    n: Vec<u64>,
    s1: Vec<u64>,
    s2: Vec<u64>,
    first: Option<u32>,
    mixed: bool,
}

impl Histogram {
    pub fn new(contexts: usize, bound: u32) -> Self {
        let symbols = bound as usize + 1;
        Self {
            contexts,
            symbols,
            bound,
            counts: vec![0; contexts * symbols],
            touched: Vec::new(),
            n: vec![0; contexts],
            s1: vec![0; contexts],
            s2: vec![0; contexts],
            first: None,
            mixed: false,
        }
    }

    #[inline]
    pub fn add(&mut self, ctx: usize, sym: u32) {
        let i = ctx * self.symbols + sym as usize;
        if self.counts[i] == 0 {
            self.touched.push(i as u32);
        }
        self.counts[i] += 1;
        let j = u64::from(sym);
        self.n[ctx] += 1;
        self.s1[ctx] += j;
        self.s2[ctx] += j * j;
        match self.first {
            None => self.first = Some(sym),
            Some(f) if f != sym => self.mixed = true,
            _ => {}
        }
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            self.counts[i as usize] = 0;
        }
        self.touched.clear();
        self.n.iter_mut().for_each(|v| *v = 0);
        self.s1.iter_mut().for_each(|v| *v = 0);
        self.s2.iter_mut().for_each(|v| *v = 0);
        self.first = None;
        self.mixed = false;
    }

    pub fn total(&self) -> u64 {
        self.n.iter().sum()
    }

    pub fn context_total(&self, ctx: usize) -> u64 {
        self.n[ctx]
    }

    pub fn count(&self, ctx: usize, sym: u32) -> u32 {
        self.counts[ctx * self.symbols + sym as usize]
    }

    /// Whether at least two distinct symbols were added.
    pub fn is_mixed(&self) -> bool {
        self.mixed
    }

    /// Unrounded entropy plus model cost. Contexts with at most one symbol
    /// contribute nothing.
    pub fn raw_bits(&self) -> f64 {
        if !self.mixed {
            return 0.0;
        }
        let mut bits = 0.0;
        for ctx in 0..self.contexts {
            let n = self.n[ctx];
            if n <= 1 {
                continue;
            }
            let p = p_hat(n as f64, self.s1[ctx] as f64, self.s2[ctx] as f64, self.bound);
            bits += n_log_n(n) + model_cost(n, self.bound, p);
        }
        for &i in &self.touched {
            bits -= n_log_n(u64::from(self.counts[i as usize]));
        }
        bits
    }

    /// Estimated code length in whole bits; zero for single-symbol content.
    pub fn bits(&self) -> u64 {
        ceil_bits(self.raw_bits())
    }
}

/// Estimator over one map with a fixed per-cell context assignment.
#[derive(Clone, Debug)]
pub struct Estimator<'m> {
    map: &'m DataMap,
    contexts: Vec<u8>,
    k: usize,
    hist: Histogram,
}

impl<'m> Estimator<'m> {
    /// `adaptive` selects the map's context model; otherwise every cell
    /// shares a single context.
    pub fn new(map: &'m DataMap, adaptive: bool) -> Self {
        let (contexts, k) = if adaptive {
            (full_contexts(map), map.kind().context_kind().count())
        } else {
            (vec![0; map.len()], 1)
        };
        Self {
            map,
            contexts,
            k,
            hist: Histogram::new(k, map.bound()),
        }
    }

    pub fn map(&self) -> &'m DataMap {
        self.map
    }

    pub fn contexts(&self) -> &[u8] {
        &self.contexts
    }

    pub fn context_count(&self) -> usize {
        self.k
    }

    /// Estimated bits of coding `region` as one block.
    pub fn estimate(&mut self, region: &Region) -> u64 {
        self.estimate_with_raw(region).0
    }

    /// Whole-bit estimate together with the unrounded value.
    pub fn estimate_with_raw(&mut self, region: &Region) -> (u64, f64) {
        self.hist.clear();
        let (map, ctx, hist) = (self.map, &self.contexts, &mut self.hist);
        map.for_each_cell(region, |i| {
            if !map.is_dontcare(i) {
                hist.add(ctx[i] as usize, map.symbol(i));
            }
        });
        let raw = hist.raw_bits();
        (ceil_bits(raw), raw)
    }
}

/// Estimated bits of a whole map under its context model.
pub fn estimate_code_length(map: &DataMap, adaptive: bool) -> u64 {
    let mut e = Estimator::new(map, adaptive);
    e.estimate(&map.full_region())
}
