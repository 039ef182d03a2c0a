//! Depth frames, coding-unit geometry, raw/PGM I/O and PSNR.

use crate::error::{Error, Result};

/// Largest depth value of an 8-bit sample.
pub const MAX_DEPTH: u8 = 255;

/// Side of a coding tree unit in pixels. Coded frames are padded to a
/// multiple of this.
pub const CTU_SIZE: usize = 64;

/// Side of the smallest coding unit.
pub const MIN_CU_SIZE: usize = 8;

/// Upper bound on the pixel count of a frame accepted by the codec.
pub const MAX_FRAME_AREA: usize = 1 << 24;

/// A grid of 8-bit depth samples stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl std::fmt::Debug for DepthFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DepthFrame")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input("frame dimensions must be non-zero"));
        }
        if samples.len() != width * height {
            return Err(Error::input(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.samples[row * self.width + col] = v;
    }

    /// Pads right and bottom edges by replication so both dimensions become
    /// multiples of `multiple`.
    pub fn padded_to(&self, multiple: usize) -> DepthFrame {
        let w = self.width.div_ceil(multiple) * multiple;
        let h = self.height.div_ceil(multiple) * multiple;
        if w == self.width && h == self.height {
            return self.clone();
        }
        let mut out = Vec::with_capacity(w * h);
        for r in 0..h {
            let src = r.min(self.height - 1);
            let row = &self.samples[src * self.width..(src + 1) * self.width];
            out.extend_from_slice(row);
            let last = row[self.width - 1];
            out.extend(std::iter::repeat_n(last, w - self.width));
        }
        DepthFrame {
            width: w,
            height: h,
            samples: out,
        }
    }

    /// Top-left `width`×`height` window.
    pub fn cropped(&self, width: usize, height: usize) -> DepthFrame {
        assert!(width <= self.width && height <= self.height);
        let mut out = Vec::with_capacity(width * height);
        for r in 0..height {
            out.extend_from_slice(&self.samples[r * self.width..r * self.width + width]);
        }
        DepthFrame {
            width,
            height,
            samples: out,
        }
    }

    /// Copies the `size`×`size` block at `rect` out of the frame.
    pub fn block(&self, rect: CuRect) -> Vec<u8> {
        let mut out = Vec::with_capacity(rect.size * rect.size);
        for r in rect.row..rect.row + rect.size {
            out.extend_from_slice(&self.samples[r * self.width + rect.col..r * self.width + rect.col + rect.size]);
        }
        out
    }
}

/// A square coding unit at pixel position (`row`, `col`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CuRect {
    pub row: usize,
    pub col: usize,
    pub size: usize,
}

impl CuRect {
    pub fn new(row: usize, col: usize, size: usize) -> Result<Self> {
        if !matches!(size, 8 | 16 | 32 | 64) {
            return Err(Error::input(format!("CU size {size} not in {{8,16,32,64}}")));
        }
        if !row.is_multiple_of(size) || !col.is_multiple_of(size) {
            return Err(Error::input(format!(
                "CU origin ({row},{col}) not aligned to {size}"
            )));
        }
        Ok(Self { row, col, size })
    }

    /// Quad-tree depth `k` with `size = 2^(6-k)`.
    pub fn depth(&self) -> usize {
        6 - self.size.trailing_zeros() as usize
    }

    /// The four children in z-order (top-left, top-right, bottom-left, bottom-right).
    pub fn quadrants(&self) -> [CuRect; 4] {
        let h = self.size / 2;
        [
            CuRect { row: self.row, col: self.col, size: h },
            CuRect { row: self.row, col: self.col + h, size: h },
            CuRect { row: self.row + h, col: self.col, size: h },
            CuRect { row: self.row + h, col: self.col + h, size: h },
        ]
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.row + self.size <= height && self.col + self.size <= width
    }
}

/// An ordered run of equally sized frames. Frames are stored padded to the
/// CTU grid; `original_*` holds the pre-padding dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    pub frames: Vec<DepthFrame>,
    pub frame_rate: f64,
    pub original_width: usize,
    pub original_height: usize,
}

impl Sequence {
    /// Builds a sequence from unpadded frames, padding each to the CTU grid.
    pub fn from_frames(frames: Vec<DepthFrame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::input("sequence needs at least one frame"))?;
        let (w, h) = (first.width(), first.height());
        if frames.iter().any(|f| f.width() != w || f.height() != h) {
            return Err(Error::Dimension("frames differ in size".into()));
        }
        let padded: Vec<_> = frames.iter().map(|f| f.padded_to(CTU_SIZE)).collect();
        if padded[0].width() * padded[0].height() > MAX_FRAME_AREA {
            return Err(Error::input("frame too large"));
        }
        Ok(Self {
            frames: padded,
            frame_rate: 25.0,
            original_width: w,
            original_height: h,
        })
    }

    pub fn padded_width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn padded_height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Original-size views of every frame.
    pub fn cropped_frames(&self) -> Vec<DepthFrame> {
        self.frames
            .iter()
            .map(|f| f.cropped(self.original_width, self.original_height))
            .collect()
    }

    pub fn original_pixel_count(&self) -> usize {
        self.original_width * self.original_height * self.frames.len()
    }
}

/// Parses headerless 8-bit raw data of `frame_count` frames.
pub fn load_raw(bytes: &[u8], width: usize, height: usize, frame_count: usize) -> Result<Sequence> {
    let frame_len = width
        .checked_mul(height)
        .ok_or_else(|| Error::input("dimensions overflow"))?;
    let expected = frame_len
        .checked_mul(frame_count)
        .ok_or_else(|| Error::input("dimensions overflow"))?;
    if frame_len == 0 || frame_count == 0 {
        return Err(Error::input("width, height and frame count must be non-zero"));
    }
    if bytes.len() != expected {
        return Err(Error::input(format!(
            "raw input holds {} bytes, expected {expected} ({width}x{height}x{frame_count})",
            bytes.len()
        )));
    }
    let frames = bytes
        .chunks_exact(frame_len)
        .map(|c| DepthFrame::new(width, height, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Sequence::from_frames(frames)
}

/// Writes every frame, cropped to the original size, as raw bytes.
pub fn store_raw(seq: &Sequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(seq.original_pixel_count());
    for f in seq.cropped_frames() {
        out.extend_from_slice(f.samples());
    }
    out
}

fn pgm_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::input("truncated PGM header"));
    }
    Ok(&data[start..*pos])
}

fn pgm_number(data: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = pgm_token(data, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::input("bad number in PGM header"))
}

/// Parses one or more concatenated binary PGM (P5, maxval 255) images.
pub fn load_pgm(bytes: &[u8]) -> Result<Sequence> {
    let mut pos = 0;
    let mut frames = Vec::new();
    while pos < bytes.len() {
        if bytes[pos..].iter().all(|b| b.is_ascii_whitespace()) {
            break;
        }
        if pgm_token(bytes, &mut pos)? != b"P5" {
            return Err(Error::input("only binary PGM (P5) is supported"));
        }
        let w = pgm_number(bytes, &mut pos)?;
        let h = pgm_number(bytes, &mut pos)?;
        let maxval = pgm_number(bytes, &mut pos)?;
        if maxval != 255 {
            return Err(Error::input(format!("PGM maxval {maxval} unsupported (need 255)")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let len = w
            .checked_mul(h)
            .ok_or_else(|| Error::input("PGM dimensions overflow"))?;
        if pos + len > bytes.len() {
            return Err(Error::input("truncated PGM raster"));
        }
        frames.push(DepthFrame::new(w, h, bytes[pos..pos + len].to_vec())?);
        pos += len;
    }
    Sequence::from_frames(frames)
}

/// Writes the sequence as concatenated P5 images at original size.
pub fn store_pgm(seq: &Sequence) -> Vec<u8> {
    let mut out = Vec::new();
    for f in seq.cropped_frames() {
        out.extend_from_slice(format!("P5\n{} {}\n255\n", f.width(), f.height()).as_bytes());
        out.extend_from_slice(f.samples());
    }
    out
}

/// Mean squared error over the top-left `width`×`height` region.
pub fn mse_region(reference: &DepthFrame, test: &DepthFrame, width: usize, height: usize) -> Result<f64> {
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            test.width(),
            test.height()
        )));
    }
    if width > reference.width() || height > reference.height() || width * height == 0 {
        return Err(Error::Dimension("region outside frame".into()));
    }
    let mut sse = 0u64;
    for r in 0..height {
        for c in 0..width {
            let d = i64::from(reference.get(r, c)) - i64::from(test.get(r, c));
            sse += (d * d) as u64;
        }
    }
    Ok(sse as f64 / (width * height) as f64)
}

/// `20·log10(255/√MSE)`; `f64::INFINITY` for identical inputs.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (255.0 / mse.sqrt()).log10()
    }
}

pub fn psnr(reference: &DepthFrame, test: &DepthFrame) -> Result<f64> {
    psnr_region(reference, test, reference.width(), reference.height())
}

pub fn psnr_region(reference: &DepthFrame, test: &DepthFrame, width: usize, height: usize) -> Result<f64> {
    mse_region(reference, test, width, height).map(psnr_from_mse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_buffer_loads_two_frames() {
        let seq = load_raw(&vec![0; 64 * 64 * 2], 64, 64, 2).unwrap();
        assert_eq!(seq.len(), 2);
        assert!(seq.frames.iter().all(|f| f.samples().iter().all(|&s| s == 0)));
    }

    #[test]
    fn short_buffer_is_rejected() {
        assert!(matches!(
            load_raw(&vec![0; 64 * 64 - 1], 64, 64, 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn pgm_is_padded_by_edge_replication() {
        let (w, h) = (128usize, 96usize);
        let mut pgm = format!("P5\n# depth\n{w} {h}\n255\n").into_bytes();
        let raster: Vec<u8> = (0..w * h).map(|i| (i / w) as u8).collect();
        pgm.extend_from_slice(&raster);
        let seq = load_pgm(&pgm).unwrap();
        assert_eq!((seq.padded_width(), seq.padded_height()), (128, 128));
        assert_eq!((seq.original_width, seq.original_height), (128, 96));
        let f = &seq.frames[0];
        for r in 96..128 {
            for c in 0..128 {
                assert_eq!(f.get(r, c), 95);
            }
        }
        let mut expected = format!("P5\n{w} {h}\n255\n").into_bytes();
        expected.extend_from_slice(&raster);
        assert_eq!(store_pgm(&seq), expected);
        assert_eq!(store_raw(&seq), raster);
    }

    #[test]
    fn raw_store_is_byte_identical_over_original_region() {
        let (w, h) = (70usize, 33usize);
        let bytes: Vec<u8> = (0..w * h * 3).map(|i| (i * 7 % 251) as u8).collect();
        let seq = load_raw(&bytes, w, h, 3).unwrap();
        assert_eq!(seq.padded_width(), 128);
        assert_eq!(seq.padded_height(), 64);
        assert_eq!(store_raw(&seq), bytes);
    }

    #[test]
    fn psnr_closed_forms() {
        let a = DepthFrame::filled(64, 64, 100);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = DepthFrame::filled(64, 64, 101);
        assert!((psnr(&a, &b).unwrap() - 20.0 * 255f64.log10()).abs() < 1e-9);
        assert!((psnr(&a, &b).unwrap() - 48.13).abs() < 5e-3);
        let mut c = a.clone();
        for (i, s) in c.samples_mut().iter_mut().enumerate() {
            *s = if i % 2 == 0 { 107 } else { 93 };
        }
        assert!((psnr(&a, &c).unwrap() - 20.0 * (255f64 / 7.0).log10()).abs() < 1e-9);
        assert!((psnr(&a, &c).unwrap() - 31.23).abs() < 5e-3);
    }

    #[test]
    fn psnr_rejects_mismatched_dims() {
        let a = DepthFrame::filled(64, 64, 0);
        let b = DepthFrame::filled(64, 128, 0);
        assert!(matches!(psnr(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn quadrants_tile_parent() {
        let r = CuRect::new(64, 128, 64).unwrap();
        let q = r.quadrants();
        assert_eq!(q[3], CuRect { row: 96, col: 160, size: 32 });
        assert_eq!(q.iter().map(|c| c.size * c.size).sum::<usize>(), 64 * 64);
        assert!(CuRect::new(4, 0, 8).is_err());
        assert_eq!(CuRect::new(0, 0, 8).unwrap().depth(), 3);
    }
}
