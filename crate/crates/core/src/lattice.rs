//! Interpolation of samples living on sparse sub-lattices of the pixel grid.
//!
//! All schemes here pass exactly through their knots and extend the
//! outermost knot value as a constant beyond the sampled range.

use crate::error::{Error, Result};
use crate::image::PlaneImage;
use crate::mosaic::SampleMask;

/// Rectangular sampling lattice `{(ox + sx·m, oy + sy·n)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub ox: usize,
    pub oy: usize,
    pub sx: usize,
    pub sy: usize,
}

impl Lattice {
    /// Recovers the lattice a mask samples, or `None` if the mask is not
    /// rectangular-periodic.
    pub fn from_mask(mask: &SampleMask) -> Option<Lattice> {
        let (w, h) = mask.dims();
        let cols: Vec<usize> = (0..w).filter(|&x| (0..h).any(|y| mask.get(x, y))).collect();
        let rows: Vec<usize> = (0..h).filter(|&y| (0..w).any(|x| mask.get(x, y))).collect();
        let (&ox, &oy) = (cols.first()?, rows.first()?);
        let stride = |v: &[usize], len: usize| -> Option<usize> {
            let s = if v.len() > 1 { v[1] - v[0] } else { len };
            v.windows(2).all(|p| p[1] - p[0] == s).then_some(s)
        };
        let lat = Lattice {
            ox,
            oy,
            sx: stride(&cols, w)?,
            sy: stride(&rows, h)?,
        };
        let exact = (0..h).all(|y| (0..w).all(|x| mask.get(x, y) == lat.contains(x, y)));
        exact.then_some(lat)
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.ox && y >= self.oy && (x - self.ox).is_multiple_of(self.sx) && (y - self.oy).is_multiple_of(self.sy)
    }

    pub fn knots_along(len: usize, offset: usize, stride: usize) -> impl Iterator<Item = usize> {
        (offset..len).step_by(stride.max(1))
    }
}

/// Piecewise-linear interpolation through `(pos, val)` knots sorted by
/// position, constant beyond the ends.
pub fn linear_1d(pos: &[usize], val: &[f64], out: &mut [f64]) {
    debug_assert_eq!(pos.len(), val.len());
    debug_assert!(!pos.is_empty());
    let last = pos.len() - 1;
    let mut k = 0;
    for (x, o) in out.iter_mut().enumerate() {
        while k < last && pos[k + 1] <= x {
            k += 1;
        }
        *o = if x <= pos[0] {
            val[0]
        } else if k == last {
            val[last]
        } else {
            let t = (x - pos[k]) as f64 / (pos[k + 1] - pos[k]) as f64;
            val[k] + t * (val[k + 1] - val[k])
        };
    }
}

/// Catmull-Rom (a = -0.5) weights for fractional offset `f` in `[0, 1)`,
/// applied to knots `m-1, m, m+1, m+2`.
#[inline]
pub fn catmull_rom_weights(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    [
        -0.5 * f3 + f2 - 0.5 * f,
        1.5 * f3 - 2.5 * f2 + 1.0,
        -1.5 * f3 + 2.0 * f2 + 0.5 * f,
        0.5 * f3 - 0.5 * f2,
    ]
}

/// Catmull-Rom interpolation of uniformly spaced knots at
/// `offset + stride·m`, replicating end knots for the outer taps.
pub fn catmull_rom_1d(offset: usize, stride: usize, val: &[f64], out: &mut [f64]) {
    let n = val.len() as isize;
    let at = |m: isize| val[m.clamp(0, n - 1) as usize];
    for (x, o) in out.iter_mut().enumerate() {
        let t = ((x as f64 - offset as f64) / stride as f64).clamp(0.0, (n - 1) as f64);
        let m = t.floor() as isize;
        let f = t - m as f64;
        if f == 0.0 {
            *o = at(m);
            continue;
        }
        let w = catmull_rom_weights(f);
        *o = w[0] * at(m - 1) + w[1] * at(m) + w[2] * at(m + 1) + w[3] * at(m + 2);
    }
}

/// Two-pass linear interpolation of arbitrary masked samples: first along
/// every row that holds knots, then down every column through those rows.
/// Equals separable bilinear interpolation on rectangular lattices.
pub fn two_pass_linear(values: &PlaneImage, mask: &SampleMask) -> Result<PlaneImage> {
    let (w, h) = values.dims();
    if mask.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            got: mask.dims(),
        });
    }
    let mut filled_rows: Vec<usize> = Vec::new();
    let mut rows = vec![0.0; w * h];
    let mut pos = Vec::new();
    let mut val = Vec::new();
    for y in 0..h {
        pos.clear();
        val.clear();
        for x in 0..w {
            if mask.get(x, y) {
                pos.push(x);
                val.push(values.get(x, y));
            }
        }
        if !pos.is_empty() {
            linear_1d(&pos, &val, &mut rows[y * w..(y + 1) * w]);
            filled_rows.push(y);
        }
    }
    if filled_rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h];
    let mut kv = vec![0.0; filled_rows.len()];
    for x in 0..w {
        for (v, &y) in kv.iter_mut().zip(&filled_rows) {
            *v = rows[y * w + x];
        }
        linear_1d(&filled_rows, &kv, &mut col);
        for (y, &v) in col.iter().enumerate() {
            out[y * w + x] = v;
        }
    }
    PlaneImage::from_vec(w, h, out)
}

/// Separable bilinear interpolation from a rectangular lattice.
pub fn lattice_bilinear(values: &PlaneImage, lat: Lattice) -> Result<PlaneImage> {
    separable(values, lat, |pos, val, out, _, _| linear_1d(pos, val, out))
}

/// Separable Catmull-Rom interpolation from a rectangular lattice.
pub fn lattice_bicubic(values: &PlaneImage, lat: Lattice) -> Result<PlaneImage> {
    separable(values, lat, |_, val, out, offset, stride| {
        catmull_rom_1d(offset, stride, val, out)
    })
}

fn separable(
    values: &PlaneImage,
    lat: Lattice,
    interp: impl Fn(&[usize], &[f64], &mut [f64], usize, usize),
) -> Result<PlaneImage> {
    let (w, h) = values.dims();
    let xs: Vec<usize> = Lattice::knots_along(w, lat.ox, lat.sx).collect();
    let ys: Vec<usize> = Lattice::knots_along(h, lat.oy, lat.sy).collect();
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyMask);
    }
    // Horizontal pass on knot rows, stored compactly.
    let mut rows = vec![0.0; ys.len() * w];
    let mut val = vec![0.0; xs.len()];
    for (r, &y) in ys.iter().enumerate() {
        for (v, &x) in val.iter_mut().zip(&xs) {
            *v = values.get(x, y);
        }
        interp(&xs, &val, &mut rows[r * w..(r + 1) * w], lat.ox, lat.sx);
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h];
    let mut kv = vec![0.0; ys.len()];
    for x in 0..w {
        for (r, v) in kv.iter_mut().enumerate() {
            *v = rows[r * w + x];
        }
        interp(&ys, &kv, &mut col, lat.oy, lat.sy);
        for (y, &v) in col.iter().enumerate() {
            out[y * w + x] = v;
        }
    }
    PlaneImage::from_vec(w, h, out)
}

/// Checks that `values` and `mask` agree in size.
pub(crate) fn check_mask(values: &PlaneImage, mask: &SampleMask) -> Result<()> {
    if values.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: values.dims(),
            got: mask.dims(),
        });
    }
    Ok(())
}
