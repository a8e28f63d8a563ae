//! Guided-filter residual interpolation (RI) and the MPFA demosaicking
//! pipelines built on it.
//!
//! Each orientation is handled independently: a masked guided filter fits a
//! local linear model `p ≈ a·G + b` to that orientation's samples, the
//! residuals at the sample sites are interpolated bilinearly over the whole
//! grid, and the interpolated residual is added back to the tentative
//! estimate. The output therefore passes through every measured sample.

use serde::{Deserialize, Serialize};

use crate::eari::{averaging_guide, guide_image, EariParams};
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, PlaneImage};
use crate::lattice::{check_mask, lattice_bilinear, two_pass_linear, Lattice};
use crate::mosaic::{angle_mask, Angle, MpfaPattern, PolarizationStack, SampleMask};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidedFilterParams {
    /// Window radius; the window is `(2r+1)²`.
    pub radius: usize,
    /// Regularization added to the guide variance.
    pub eps: f64,
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        Self { radius: 2, eps: 1e-4 }
    }
}

impl GuidedFilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::InvalidParams("guided filter radius must be at least 1".into()));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "guided filter eps must be >= 0, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Samples of one orientation; `values` outside `mask` are ignored.
#[derive(Clone, Debug)]
pub struct SparsePlane {
    pub values: PlaneImage,
    pub mask: SampleMask,
}

/// Window sums over `(2r+1)²` windows clipped to the image, streamed row
/// by row for `N` interleaved channels. `fill(y, row)` writes input row `y`
/// and `emit(y, sums)` receives the sums of output row `y`. Rows are
/// requested in increasing order, at most `r` ahead of the row emitted.
fn box_sum_rows<const N: usize>(
    w: usize,
    h: usize,
    r: usize,
    mut fill: impl FnMut(usize, &mut [[f64; N]]),
    mut emit: impl FnMut(usize, &[[f64; N]]) -> Result<()>,
) -> Result<()> {
    let slots = (2 * r + 1).min(h);
    let mut ring = vec![[0.0; N]; slots * w];
    let mut input = vec![[0.0; N]; w];
    let mut sums = vec![[0.0; N]; w];
    let mut loaded = 0;
    for y in 0..h {
        let (lo, hi) = (y.saturating_sub(r), (y + r).min(h - 1));
        while loaded <= hi {
            fill(loaded, &mut input);
            let dst = &mut ring[(loaded % slots) * w..(loaded % slots + 1) * w];
            for (x, d) in dst.iter_mut().enumerate() {
                *d = [0.0; N];
                for v in &input[x.saturating_sub(r)..=(x + r).min(w - 1)] {
                    for (a, b) in d.iter_mut().zip(v) {
                        *a += b;
                    }
                }
            }
            loaded += 1;
        }
        sums.fill([0.0; N]);
        for yy in lo..=hi {
            let src = &ring[(yy % slots) * w..(yy % slots + 1) * w];
            for (d, v) in sums.iter_mut().zip(src) {
                for (a, b) in d.iter_mut().zip(v) {
                    *a += b;
                }
            }
        }
        emit(y, &sums)?;
    }
    Ok(())
}

/// Number of pixels in the clipped window around `i` along an axis of
/// length `n`.
#[inline]
fn window_span(i: usize, n: usize, r: usize) -> f64 {
    ((i + r).min(n - 1) - i.saturating_sub(r) + 1) as f64
}

/// Value of the masked sample closest to `(x, y)` in Chebyshev distance,
/// scanning each ring in row-major order.
fn nearest_sample(p: &PlaneImage, mask: &SampleMask, x: usize, y: usize) -> Option<f64> {
    let (w, h) = p.dims();
    let reach = w.max(h) as isize;
    let (x, y) = (x as isize, y as isize);
    for d in 1..=reach {
        for yy in (y - d).max(0)..=(y + d).min(h as isize - 1) {
            for xx in (x - d).max(0)..=(x + d).min(w as isize - 1) {
                let on_ring = (yy - y).abs() == d || (xx - x).abs() == d;
                if on_ring && mask.get(xx as usize, yy as usize) {
                    return Some(p.get(xx as usize, yy as usize));
                }
            }
        }
    }
    None
}

/// Guided filter of `p` steered by `guide`. With a mask, window statistics
/// use only masked pixels; windows holding one sample take that sample as a
/// constant model and windows holding none take the nearest sample.
pub fn guided_filter(
    p: &PlaneImage,
    guide: &PlaneImage,
    mask: Option<&SampleMask>,
    params: &GuidedFilterParams,
) -> Result<PlaneImage> {
    params.validate()?;
    ensure_same_dims(p, guide)?;
    let (w, h) = p.dims();
    let r = params.radius;
    let ones;
    let mask = match mask {
        Some(m) => {
            check_mask(p, m)?;
            m
        }
        None => {
            ones = SampleMask::full(w, h);
            &ones
        }
    };
    if mask.count() == 0 {
        return Err(Error::EmptyMask);
    }

    let n = w * h;
    let (pv, gv, mv) = (p.samples(), guide.samples(), mask.bits());
    // Per-window linear coefficients from count, Σg, Σp, Σg², Σgp over the
    // masked samples.
    let mut ab = vec![[0.0; 2]; n];
    box_sum_rows::<5>(
        w,
        h,
        r,
        |y, row| {
            for (x, s) in row.iter_mut().enumerate() {
                let i = y * w + x;
                *s = if mv[i] {
                    let (g, v) = (gv[i], pv[i]);
                    [1.0, g, v, g * g, g * v]
                } else {
                    [0.0; 5]
                };
            }
        },
        |y, sums| {
            for (x, &[c, si, sp, sii, sip]) in sums.iter().enumerate() {
                ab[y * w + x] = if c >= 2.0 {
                    let mean_i = si / c;
                    let mean_p = sp / c;
                    let var = (sii / c - mean_i * mean_i).max(0.0);
                    let cov = sip / c - mean_i * mean_p;
                    let den = var + params.eps;
                    let a = if den > 0.0 { cov / den } else { 0.0 };
                    [a, mean_p - a * mean_i]
                } else if c >= 1.0 {
                    [0.0, sp]
                } else {
                    [0.0, nearest_sample(p, mask, x, y).ok_or(Error::EmptyMask)?]
                };
            }
            Ok(())
        },
    )?;

    let mut q = vec![0.0; n];
    box_sum_rows::<2>(
        w,
        h,
        r,
        |y, row| row.copy_from_slice(&ab[y * w..(y + 1) * w]),
        |y, sums| {
            let span_y = window_span(y, h, r);
            for (x, &[sa, sb]) in sums.iter().enumerate() {
                let i = y * w + x;
                q[i] = (sa * gv[i] + sb) / (window_span(x, w, r) * span_y);
            }
            Ok(())
        },
    )?;
    PlaneImage::from_vec(w, h, q)
}

/// Residual interpolation of one orientation's samples against `guide`.
pub fn residual_interpolate(
    sparse: &SparsePlane,
    guide: &PlaneImage,
    params: &GuidedFilterParams,
) -> Result<PlaneImage> {
    check_mask(&sparse.values, &sparse.mask)?;
    if sparse.mask.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let tentative = guided_filter(&sparse.values, guide, Some(&sparse.mask), params)?;
    let residual = sparse.values.zip_map(&tentative, |v, t| v - t)?;
    let residual = match Lattice::from_mask(&sparse.mask) {
        Some(lat) => lattice_bilinear(&residual, lat)?,
        None => two_pass_linear(&residual, &sparse.mask)?,
    };
    let mut out = tentative.zip_map(&residual, |t, r| t + r)?;
    // Pin the knots exactly rather than to within rounding of t + (v - t).
    for (i, (o, &v)) in out.samples_mut().iter_mut().zip(sparse.values.samples()).enumerate() {
        if sparse.mask.bits()[i] {
            *o = v;
        }
    }
    Ok(out)
}

/// RI demosaicking of an MPFA mosaic against a caller-supplied guide.
pub fn demosaick_mpfa_with_guide(
    raw: &PlaneImage,
    pat: &MpfaPattern,
    guide: &PlaneImage,
    gf: &GuidedFilterParams,
) -> Result<PolarizationStack> {
    ensure_same_dims(raw, guide)?;
    let (w, h) = raw.dims();
    let planes = Angle::ALL
        .iter()
        .map(|&a| {
            let sparse = SparsePlane {
                values: raw.clone(),
                mask: angle_mask(pat, w, h, a),
            };
            residual_interpolate(&sparse, guide, gf)
        })
        .collect::<Result<Vec<_>>>()?;
    let [i0, i45, i90, i135]: [PlaneImage; 4] = planes.try_into().expect("four orientations");
    PolarizationStack::new(i0, i45, i90, i135)
}

/// EARI demosaicking: edge-aware guide, then RI per orientation.
pub fn demosaick_mpfa_eari(
    raw: &PlaneImage,
    pat: &MpfaPattern,
    eari: &EariParams,
    gf: &GuidedFilterParams,
) -> Result<PolarizationStack> {
    let guide = guide_image(raw, eari)?;
    demosaick_mpfa_with_guide(raw, pat, &guide, gf)
}

/// RI with a non-directional averaging guide (the edge-awareness ablation).
pub fn demosaick_mpfa_averaging_ri(
    raw: &PlaneImage,
    pat: &MpfaPattern,
    gf: &GuidedFilterParams,
) -> Result<PolarizationStack> {
    demosaick_mpfa_with_guide(raw, pat, &averaging_guide(raw), gf)
}
