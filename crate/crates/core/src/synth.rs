//! Deterministic synthetic depth sequences: piecewise-constant objects with
//! integer motion over a static background, plus sparse impulse noise.
//!
//! Scene files are `key = value` lines; `#` starts a comment. Objects are
//! given as `object = rect|ellipse x y w h depth dx dy`, where `(x, y)` is
//! the top-left corner of the bounding box in frame 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::{DepthFrame, Sequence};

/// Largest per-frame translation accepted, matching the default search width.
pub const MAX_OBJECT_SPEED: i32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Rect,
    Ellipse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SceneObject {
    pub shape: Shape,
    pub x: i32,
    pub y: i32,
    pub width: u32,
    pub height: u32,
    pub depth: u8,
    pub dx: i32,
    pub dy: i32,
}

impl SceneObject {
    fn covers(&self, t: usize, row: usize, col: usize) -> bool {
        let ox = i64::from(self.x) + i64::from(self.dx) * t as i64;
        let oy = i64::from(self.y) + i64::from(self.dy) * t as i64;
        let (c, r) = (col as i64 - ox, row as i64 - oy);
        let (w, h) = (i64::from(self.width), i64::from(self.height));
        if c < 0 || r < 0 || c >= w || r >= h {
            return false;
        }
        match self.shape {
            Shape::Rect => true,
            Shape::Ellipse => {
                let u = (2 * c + 1 - w) as f64 / w as f64;
                let v = (2 * r + 1 - h) as f64 / h as f64;
                u * u + v * v <= 1.0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    pub background: u8,
    /// Depth added to the background from the top row to the bottom row.
    pub gradient: i32,
    /// Largest magnitude of an impulse.
    pub noise_amplitude: u8,
    /// Per-pixel, per-frame impulse probability.
    pub noise_density: f64,
    /// Drawn in order; later objects occlude earlier ones.
    pub objects: Vec<SceneObject>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            frames: 16,
            seed: 1,
            background: 32,
            gradient: 0,
            noise_amplitude: 0,
            noise_density: 0.0,
            objects: Vec::new(),
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return Err(Error::input("scene needs positive width, height and frame count"));
        }
        if !(0.0..=1.0).contains(&self.noise_density) {
            return Err(Error::Input(format!("noise density {} not in [0, 1]", self.noise_density)));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.dx.abs() > MAX_OBJECT_SPEED || o.dy.abs() > MAX_OBJECT_SPEED {
                return Err(Error::Input(format!("object {i} moves more than {MAX_OBJECT_SPEED} pixels per frame")));
            }
            if o.width == 0 || o.height == 0 {
                return Err(Error::Input(format!("object {i} has an empty extent")));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SceneSpec::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Input(format!("scene line {}: {what}", n + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: std::str::FromStr>(v: &str, bad: impl Fn(&str) -> Error) -> Result<T> {
                v.parse().map_err(|_| bad("malformed number"))
            }
            match key {
                "width" => spec.width = num(value, bad)?,
                "height" => spec.height = num(value, bad)?,
                "frames" => spec.frames = num(value, bad)?,
                "seed" => spec.seed = num(value, bad)?,
                "background" => spec.background = num(value, bad)?,
                "gradient" => spec.gradient = num(value, bad)?,
                "noise_amplitude" => spec.noise_amplitude = num(value, bad)?,
                "noise_density" => spec.noise_density = num(value, bad)?,
                "object" => {
                    let f: Vec<&str> = value.split_whitespace().collect();
                    if f.len() != 8 {
                        return Err(bad("object needs: shape x y w h depth dx dy"));
                    }
                    let shape = match f[0] {
                        "rect" => Shape::Rect,
                        "ellipse" => Shape::Ellipse,
                        _ => return Err(bad("shape must be rect or ellipse")),
                    };
                    spec.objects.push(SceneObject {
                        shape,
                        x: num(f[1], bad)?,
                        y: num(f[2], bad)?,
                        width: num(f[3], bad)?,
                        height: num(f[4], bad)?,
                        depth: num(f[5], bad)?,
                        dx: num(f[6], bad)?,
                        dy: num(f[7], bad)?,
                    });
                }
                _ => return Err(bad(&format!("unknown key `{key}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "width = {}\nheight = {}\nframes = {}\nseed = {}\nbackground = {}\ngradient = {}\nnoise_amplitude = {}\nnoise_density = {}\n",
            self.width, self.height, self.frames, self.seed, self.background, self.gradient, self.noise_amplitude, self.noise_density
        );
        for o in &self.objects {
            let shape = match o.shape {
                Shape::Rect => "rect",
                Shape::Ellipse => "ellipse",
            };
            s.push_str(&format!(
                "object = {shape} {} {} {} {} {} {} {}\n",
                o.x, o.y, o.width, o.height, o.depth, o.dx, o.dy
            ));
        }
        s
    }
}

fn background_at(spec: &SceneSpec, row: usize) -> u8 {
    let g = i64::from(spec.gradient) * row as i64 / spec.height.max(1) as i64;
    (i64::from(spec.background) + g).clamp(0, 255) as u8
}

pub fn generate(spec: &SceneSpec) -> Result<Sequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let mut frames = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mut samples = Vec::with_capacity(w * h);
        for r in 0..h {
            let bg = background_at(spec, r);
            for c in 0..w {
                let v = spec.objects.iter().rev().find(|o| o.covers(t, r, c)).map_or(bg, |o| o.depth);
                samples.push(v);
            }
        }
        if spec.noise_amplitude > 0 && spec.noise_density > 0.0 {
            for s in &mut samples {
                if rng.gen_bool(spec.noise_density) {
                    let m = i32::from(rng.gen_range(1..=spec.noise_amplitude));
                    let m = if rng.gen_bool(0.5) { m } else { -m };
                    *s = (i32::from(*s) + m).clamp(0, 255) as u8;
                }
            }
        }
        frames.push(DepthFrame::new(w, h, samples)?);
    }
    Sequence::from_frames(frames)
}

/// Proportion of zero co-located frame differences over frames `1..`, at
/// original size.
pub fn temporal_zero_proportion(seq: &Sequence) -> f64 {
    let (w, h) = (seq.original_width, seq.original_height);
    let mut zeros = 0usize;
    let mut total = 0usize;
    for pair in seq.frames.windows(2) {
        for r in 0..h {
            for c in 0..w {
                zeros += usize::from(pair[0].get(r, c) == pair[1].get(r, c));
                total += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        zeros as f64 / total as f64
    }
}

/// Adjusts the noise density so the temporal zero proportion lands within
/// `tolerance` of `target`. Fails when motion alone already falls short.
pub fn calibrate_noise(spec: &SceneSpec, target: f64, tolerance: f64) -> Result<SceneSpec> {
    if spec.noise_amplitude == 0 {
        return Err(Error::input("calibration needs a positive noise amplitude"));
    }
    let measure = |d: f64| -> Result<(SceneSpec, f64)> {
        let mut s = spec.clone();
        s.noise_density = d;
        let z = temporal_zero_proportion(&generate(&s)?);
        Ok((s, z))
    };
    let (clean, ceiling) = measure(0.0)?;
    if ceiling < target - tolerance {
        return Err(Error::Input(format!("motion alone gives zero proportion {ceiling:.3}, below {target}")));
    }
    if (ceiling - target).abs() <= tolerance {
        return Ok(clean);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = clean;
    let mut best_gap = (ceiling - target).abs();
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (s, z) = measure(mid)?;
        if (z - target).abs() < best_gap {
            best_gap = (z - target).abs();
            best = s;
        }
        if best_gap <= tolerance / 2.0 {
            break;
        }
        if z > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best_gap > tolerance {
        return Err(Error::Input(format!("could not reach zero proportion {target} within {tolerance}")));
    }
    Ok(best)
}

/// Five 256×256, 16-frame scenes covering static, translating, occluding
/// and noisy content.
pub fn standard_suite() -> Vec<SceneSpec> {
    let obj = |shape, x, y, width, height, depth, dx, dy| SceneObject {
        shape,
        x,
        y,
        width,
        height,
        depth,
        dx,
        dy,
    };
    let base = SceneSpec::default();
    vec![
        SceneSpec {
            seed: 11,
            background: 40,
            gradient: 60,
            objects: vec![obj(Shape::Rect, 40, 60, 64, 64, 180, 2, 0)],
            ..base.clone()
        },
        SceneSpec {
            seed: 12,
            background: 20,
            objects: vec![
                obj(Shape::Ellipse, 30, 30, 90, 70, 150, 3, 1),
                obj(Shape::Rect, 150, 140, 50, 80, 220, -2, -1),
            ],
            ..base.clone()
        },
        SceneSpec {
            seed: 13,
            background: 70,
            gradient: -40,
            noise_amplitude: 3,
            noise_density: 0.002,
            objects: vec![obj(Shape::Rect, 0, 100, 120, 40, 130, 4, 0), obj(Shape::Ellipse, 160, 20, 60, 60, 200, -1, 3)],
            ..base.clone()
        },
        SceneSpec {
            seed: 14,
            background: 10,
            objects: vec![
                obj(Shape::Rect, 20, 20, 40, 40, 90, 1, 1),
                obj(Shape::Rect, 100, 40, 40, 100, 120, 0, 2),
                obj(Shape::Ellipse, 180, 150, 50, 50, 240, -3, -2),
            ],
            ..base.clone()
        },
        SceneSpec {
            seed: 15,
            background: 100,
            gradient: 80,
            noise_amplitude: 2,
            noise_density: 0.005,
            ..base
        },
    ]
}
