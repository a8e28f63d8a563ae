//! Single-channel floating point images and boundary-padded 2D correlation.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, `y`
//! increasing downward. Samples are stored row-major.

use crate::error::{Error, Result};

/// A single-channel image of `f64` samples, nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneImage {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl PlaneImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            samples: vec![value; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if samples.len() != width * height {
            return Err(Error::InvalidDimensions(format!(
                "{}x{} image needs {} samples, got {}",
                width,
                height,
                width * height,
                samples.len()
            )));
        }
        Ok(Self { width, height, samples })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Ok(Self { width, height, samples })
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
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.samples[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Pixel value with coordinates clamped into the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_dims(self, other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| v * k)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "image must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_same_dims(a: &PlaneImage, b: &PlaneImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            got: b.dims(),
        });
    }
    Ok(())
}

/// How samples outside the image are synthesized during filtering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BorderMode {
    /// Repeat the edge sample: `aaa|abc`.
    #[default]
    Replicate,
    /// Mirror including the edge sample: `cba|abc`.
    Symmetric,
    /// Mirror excluding the edge sample: `dcb|abc`. Keeps the parity of
    /// period-2 mosaics intact across the border.
    Reflect101,
}

impl BorderMode {
    /// Maps a possibly out-of-range index into `0..len`.
    pub fn resolve(self, i: isize, len: usize) -> usize {
        let n = len as isize;
        if (0..n).contains(&i) {
            return i as usize;
        }
        if len == 1 {
            return 0;
        }
        match self {
            BorderMode::Replicate => i.clamp(0, n - 1) as usize,
            BorderMode::Symmetric => {
                let period = 2 * n;
                let m = i.rem_euclid(period);
                (if m < n { m } else { period - 1 - m }) as usize
            }
            BorderMode::Reflect101 => {
                let period = 2 * (n - 1);
                let m = i.rem_euclid(period);
                (if m < n { m } else { period - m }) as usize
            }
        }
    }
}

/// Square correlation kernel with the anchor at its center.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel2D {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("kernel size must be odd, got {size}")));
        }
        if taps.len() != size * size {
            return Err(Error::InvalidParams(format!(
                "kernel of size {size} needs {} taps, got {}",
                size * size,
                taps.len()
            )));
        }
        Ok(Self { size, taps })
    }

    /// Convenience for compile-time kernels; panics on malformed input.
    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::new(N, rows.iter().flatten().copied().collect()).expect("valid kernel literal")
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn anchor(&self) -> usize {
        (self.size - 1) / 2
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at kernel row `r`, column `c`.
    #[inline]
    pub fn tap(&self, r: usize, c: usize) -> f64 {
        self.taps[r * self.size + c]
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            size: self.size,
            taps: self.taps.iter().map(|t| t * k).collect(),
        }
    }
}

/// Anchored correlation (no kernel flip): tap `(r, c)` multiplies the pixel
/// at `(x + c - a, y + r - a)`.
pub fn convolve(img: &PlaneImage, kernel: &Kernel2D, border: BorderMode) -> PlaneImage {
    let (w, h) = img.dims();
    let a = kernel.anchor() as isize;
    let size = kernel.size();

    // Padded index tables: entry `i` holds the source index for `i - a`.
    let col_map: Vec<usize> = (0..w + 2 * a as usize)
        .map(|i| border.resolve(i as isize - a, w))
        .collect();
    let row_map: Vec<usize> = (0..h + 2 * a as usize)
        .map(|i| border.resolve(i as isize - a, h))
        .collect();

    let nonzero: Vec<(usize, usize, f64)> = (0..size)
        .flat_map(|r| (0..size).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, kernel.tap(r, c)))
        .filter(|&(_, _, t)| t != 0.0)
        .collect();

    let src = img.samples();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for &(r, c, t) in &nonzero {
            let srow = &src[row_map[y + r] * w..(row_map[y + r] + 1) * w];
            let cols = &col_map[c..c + w];
            for (d, &sx) in dst.iter_mut().zip(cols) {
                *d += t * srow[sx];
            }
        }
    }
    PlaneImage::from_vec(w, h, out).expect("dimensions preserved")
}
