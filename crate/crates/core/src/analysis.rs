//! Distortion model for two-sided geometric residuals, rate/distortion
//! statistics, and Bjøntegaard delta metrics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frame::{mse_region, psnr_from_mse, Sequence};

/// Expected MSE of a step-`q` quantiser applied to residuals drawn from a
/// two-sided geometric law whose proportion of zeros is `p`.
pub fn tsg_mse(p: f64, q: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Input(format!("zero proportion {p} not in (0, 1)")));
    }
    if q.is_multiple_of(2) || q == 0 {
        return Err(Error::Input(format!("step {q} must be odd")));
    }
    let d = (q - 1) / 2;
    let theta = (1.0 - p) / (1.0 + p);
    let mut total = 0.0;
    for k in 1..=d {
        let kf = f64::from(k);
        let mut inner = 0.0;
        for i in 0u32.. {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let term = theta.powf(f64::from(i) * f64::from(q) + sign * kf);
            inner += term;
            if term < 1e-12 * inner || term == 0.0 {
                break;
            }
        }
        total += kf * kf * inner;
    }
    Ok(2.0 * p * total)
}

/// One rate/distortion sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    /// Bits per pixel.
    pub bpp: f64,
    /// PSNR in dB.
    pub psnr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdMetrics {
    /// Average bitrate change of `b` against `a` at equal quality, in percent.
    pub bd_br: f64,
    /// Average PSNR change of `b` against `a` at equal rate, in dB.
    pub bd_psnr: f64,
}

/// Least-squares cubic through `(x, y)`, coefficients lowest order first.
fn fit_cubic(x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    let n = x.len();
    let a = DMatrix::from_fn(n, 4, |r, c| x[r].powi(c as i32));
    let b = DVector::from_column_slice(y);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Input(format!("cubic fit failed: {e}")))?;
    Ok([sol[0], sol[1], sol[2], sol[3]])
}

fn integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let prim = |x: f64| c[0] * x + c[1] * x.powi(2) / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
    prim(hi) - prim(lo)
}

fn average_gap(xa: &[f64], ya: &[f64], xb: &[f64], yb: &[f64]) -> Result<f64> {
    let range = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let ((amin, amax), (bmin, bmax)) = (range(xa), range(xb));
    let (lo, hi) = (amin.max(bmin), amax.min(bmax));
    if !(hi > lo) {
        return Err(Error::input("curves do not overlap"));
    }
    let (ca, cb) = (fit_cubic(xa, ya)?, fit_cubic(xb, yb)?);
    Ok((integral(&cb, lo, hi) - integral(&ca, lo, hi)) / (hi - lo))
}

/// Bjøntegaard deltas of `b` relative to `a`. Negative BD-BR is a gain.
pub fn bd_metrics(a: &[RdPoint], b: &[RdPoint]) -> Result<BdMetrics> {
    if a.len() < 4 || b.len() < 4 {
        return Err(Error::input("each curve needs at least 4 points"));
    }
    if a.iter().chain(b).any(|p| !(p.bpp > 0.0) || !p.psnr.is_finite()) {
        return Err(Error::input("rates must be positive and PSNR finite"));
    }
    let lr = |c: &[RdPoint]| c.iter().map(|p| p.bpp.log10()).collect::<Vec<_>>();
    let ps = |c: &[RdPoint]| c.iter().map(|p| p.psnr).collect::<Vec<_>>();
    let (ra, rb, pa, pb) = (lr(a), lr(b), ps(a), ps(b));
    let bd_psnr = average_gap(&ra, &pa, &rb, &pb)?;
    let log_gap = average_gap(&pa, &ra, &pb, &rb)?;
    Ok(BdMetrics {
        bd_br: (10f64.powf(log_gap) - 1.0) * 100.0,
        bd_psnr,
    })
}

/// CSV with a `bpp,psnr` header and one point per line.
pub fn rd_points_to_csv(points: &[RdPoint]) -> String {
    let mut s = String::from("bpp,psnr\n");
    for p in points {
        s.push_str(&format!("{},{}\n", p.bpp, p.psnr));
    }
    s
}

pub fn parse_rd_csv(text: &str) -> Result<Vec<RdPoint>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h.replace(' ', "").eq_ignore_ascii_case("bpp,psnr") => {}
        _ => return Err(Error::input("CSV header must be `bpp,psnr`")),
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let mut it = line.split(',').map(str::trim);
            let parse = |f: Option<&str>| f.and_then(|v| v.parse::<f64>().ok());
            match (parse(it.next()), parse(it.next()), it.next()) {
                (Some(bpp), Some(psnr), None) => Ok(RdPoint { bpp, psnr }),
                _ => Err(Error::Input(format!("CSV line {}: expected two numbers", n + 2))),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceStats {
    pub bpp: f64,
    /// `8 / bpp`.
    pub compression_ratio: f64,
    /// Over all frames at original size; infinite when lossless.
    pub psnr: f64,
    /// Proportion of rank-0 residuals among coded residual cells, when known.
    pub zero_proportion: Option<f64>,
}

pub fn compression_ratio(bpp: f64) -> f64 {
    8.0 / bpp
}

/// Rate and distortion of a decoded sequence against its original.
pub fn sequence_stats(original: &Sequence, decoded: &Sequence, coded_bits: usize) -> Result<SequenceStats> {
    if original.len() != decoded.len() {
        return Err(Error::Dimension(format!("{} original frames vs {} decoded", original.len(), decoded.len())));
    }
    let (w, h) = (original.original_width, original.original_height);
    if decoded.original_width != w || decoded.original_height != h {
        return Err(Error::Dimension("original and decoded sizes differ".into()));
    }
    let mut sse = 0.0;
    for (a, b) in original.frames.iter().zip(&decoded.frames) {
        sse += mse_region(a, b, w, h)? * (w * h) as f64;
    }
    let pixels = original.original_pixel_count() as f64;
    let bpp = coded_bits as f64 / pixels;
    Ok(SequenceStats {
        bpp,
        compression_ratio: compression_ratio(bpp),
        psnr: psnr_from_mse(sse / pixels),
        zero_proportion: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::DepthFrame;
    use crate::quant::quantize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct sum over the two-sided geometric law of squared quantisation
    /// errors.
    fn brute_mse(p: f64, q: u32) -> f64 {
        let theta = (1.0 - p) / (1.0 + p);
        (-2000i32..=2000)
            .map(|k| {
                let pr = p * theta.powi(k.abs());
                let e = f64::from(k - quantize(k, q) * q as i32);
                pr * e * e
            })
            .sum()
    }

    /// The folded series evaluated term by term with a fixed, generous count.
    fn literal_series(p: f64, q: u32) -> f64 {
        let theta = (1.0 - p) / (1.0 + p);
        let d = (q as i32 - 1) / 2;
        let mut total = 0.0;
        for k in 1..=d {
            for i in 0..400i32 {
                let exp = i * q as i32 + if i % 2 == 0 { k } else { -k };
                total += f64::from(k * k) * theta.powi(exp);
            }
        }
        2.0 * p * total
    }

    #[test]
    fn series_matches_literal_evaluation() {
        for p in [0.3, 0.5, 0.8, 0.9, 0.97] {
            for q in [3, 5, 9, 15] {
                let a = tsg_mse(p, q).unwrap();
                let b = literal_series(p, q);
                assert!((a - b).abs() <= 1e-10 * b, "p={p} q={q} {a} vs {b}");
            }
        }
    }

    #[test]
    fn series_approximates_exact_quantiser_error_at_large_steps() {
        for p in [0.8, 0.9, 0.97] {
            let a = tsg_mse(p, 15).unwrap();
            let b = brute_mse(p, 15);
            assert!((a - b).abs() <= 1e-6 * b, "p={p} {a} vs {b}");
        }
    }

    #[test]
    fn stated_mse_values() {
        assert!((tsg_mse(0.8, 15).unwrap() - 0.282).abs() < 1e-3);
        assert!((tsg_mse(0.9, 15).unwrap() - 0.117).abs() < 1e-3);
        assert!((psnr_from_mse(tsg_mse(0.9, 15).unwrap()) - 57.44).abs() < 0.05);
        assert_eq!(tsg_mse(0.5, 1).unwrap(), 0.0);
        assert!(tsg_mse(1.0, 15).is_err());
        assert!(tsg_mse(0.5, 4).is_err());
        assert!(tsg_mse(0.999_999, 15).unwrap() < 1e-5);
    }

    #[test]
    fn monotone_in_step_and_zero_proportion() {
        for p in [0.6, 0.8, 0.9] {
            let v: Vec<f64> = (1..=15).step_by(2).map(|q| tsg_mse(p, q).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
        let v: Vec<f64> = (1..10).map(|i| tsg_mse(f64::from(i) / 10.0, 15).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] > w[1]));
    }

    fn sample_tsg(rng: &mut ChaCha8Rng, p: f64) -> i32 {
        if rng.gen_bool(p) {
            return 0;
        }
        let theta = (1.0 - p) / (1.0 + p);
        let mut m = 1;
        while rng.gen_bool(theta) {
            m += 1;
        }
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    }

    #[test]
    fn monte_carlo_quantiser_matches_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [0.8, 0.9] {
            let n = 1_000_000;
            let q = 15;
            let sse: f64 = (0..n)
                .map(|_| {
                    let r = sample_tsg(&mut rng, p);
                    let e = f64::from(r - quantize(r, q) * q as i32);
                    e * e
                })
                .sum();
            let measured = sse / f64::from(n);
            let model = tsg_mse(p, q).unwrap();
            assert!((measured - model).abs() / model < 0.05, "p={p} measured {measured} model {model}");
        }
    }

    fn curve() -> Vec<RdPoint> {
        [(0.1, 40.0), (0.2, 44.5), (0.4, 48.0), (0.8, 51.0), (1.6, 53.2)]
            .iter()
            .map(|&(bpp, psnr)| RdPoint { bpp, psnr })
            .collect()
    }

    #[test]
    fn bd_identity_shift_and_halving() {
        let a = curve();
        let z = bd_metrics(&a, &a).unwrap();
        assert!(z.bd_br.abs() < 1e-9 && z.bd_psnr.abs() < 1e-9);
        let up: Vec<_> = a.iter().map(|p| RdPoint { psnr: p.psnr + 1.0, ..*p }).collect();
        assert!((bd_metrics(&a, &up).unwrap().bd_psnr - 1.0).abs() < 0.01);
        let half: Vec<_> = a.iter().map(|p| RdPoint { bpp: p.bpp / 2.0, ..*p }).collect();
        assert!((bd_metrics(&a, &half).unwrap().bd_br + 50.0).abs() < 0.5);
    }

    #[test]
    fn bd_antisymmetry_and_errors() {
        let a = curve();
        let b: Vec<_> = a.iter().enumerate().map(|(i, p)| RdPoint { bpp: p.bpp * 0.7, psnr: p.psnr + 0.1 * i as f64 }).collect();
        let ab = bd_metrics(&a, &b).unwrap();
        let ba = bd_metrics(&b, &a).unwrap();
        assert!((ab.bd_psnr + ba.bd_psnr).abs() < 1e-6);
        assert!(bd_metrics(&a[..3], &b).is_err());
        let far: Vec<_> = a.iter().map(|p| RdPoint { bpp: p.bpp * 1000.0, psnr: p.psnr + 100.0 }).collect();
        assert!(bd_metrics(&a, &far).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let a = curve();
        assert_eq!(parse_rd_csv(&rd_points_to_csv(&a)).unwrap(), a);
        assert!(parse_rd_csv("rate,quality\n1,2\n").is_err());
        assert!(parse_rd_csv("bpp,psnr\n1\n").is_err());
    }

    #[test]
    fn stats_examples() {
        assert!((compression_ratio(0.190) - 42.105).abs() < 1e-3);
        let f = DepthFrame::filled(20, 10, 9);
        let s = Sequence::from_frames(vec![f.clone(), f]).unwrap();
        let st = sequence_stats(&s, &s, 8 * 400).unwrap();
        assert_eq!(st.bpp, 8.0);
        assert_eq!(st.compression_ratio, 1.0);
        assert!(st.psnr.is_infinite());
    }
}
