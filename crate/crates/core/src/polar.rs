//! Linear Stokes parameters, DoP/AoP, and the evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::cpfa::ColorPolarizationStack;
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, PlaneImage};
use crate::mosaic::{Angle, Color, PolarizationStack};

/// Floor on S0 in the DoP denominator.
pub const DOP_FLOOR: f64 = 1e-6;

/// PSNR peaks on normalized data. S0 spans `[0, 2]`; S1 and S2 are signed
/// with magnitude at most 1.
pub const PEAK_INTENSITY: f64 = 1.0;
pub const PEAK_S0: f64 = 2.0;
pub const PEAK_S12: f64 = 1.0;
pub const PEAK_DOP: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct StokesMaps {
    pub s0: PlaneImage,
    pub s1: PlaneImage,
    pub s2: PlaneImage,
}

impl StokesMaps {
    pub fn new(s0: PlaneImage, s1: PlaneImage, s2: PlaneImage) -> Result<Self> {
        ensure_same_dims(&s0, &s1)?;
        ensure_same_dims(&s0, &s2)?;
        Ok(Self { s0, s1, s2 })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.s0.dims()
    }
}

/// `S0` is the mean of the two orthogonal-pair sums, so demosaicked stacks
/// that break `I0 + I90 = I45 + I135` are treated symmetrically.
pub fn stokes_from_stack(stack: &PolarizationStack) -> StokesMaps {
    let p = |a| stack.plane(a).samples();
    let (i0, i45, i90, i135) = (p(Angle::A0), p(Angle::A45), p(Angle::A90), p(Angle::A135));
    let (w, h) = stack.dims();
    let n = w * h;
    let mut s0 = Vec::with_capacity(n);
    let mut s1 = Vec::with_capacity(n);
    let mut s2 = Vec::with_capacity(n);
    for i in 0..n {
        s0.push((i0[i] + i90[i] + i45[i] + i135[i]) / 2.0);
        s1.push(i0[i] - i90[i]);
        s2.push(i45[i] - i135[i]);
    }
    let plane = |v| PlaneImage::from_vec(w, h, v).expect("stack dims");
    StokesMaps {
        s0: plane(s0),
        s1: plane(s1),
        s2: plane(s2),
    }
}

/// `(I0 + I90) - (I45 + I135)` per pixel; zero for a consistent stack.
pub fn consistency_residual(stack: &PolarizationStack) -> PlaneImage {
    let (w, h) = stack.dims();
    PlaneImage::from_fn(w, h, |x, y| {
        let v = |a| stack.plane(a).get(x, y);
        v(Angle::A0) + v(Angle::A90) - v(Angle::A45) - v(Angle::A135)
    })
    .expect("stack dims")
}

/// Intensity behind an ideal linear polarizer at `theta`:
/// `(S0 + S1 cos 2θ + S2 sin 2θ) / 2`.
#[inline]
pub fn polarizer_intensity(s0: f64, s1: f64, s2: f64, theta_rad: f64) -> f64 {
    let (s, c) = (2.0 * theta_rad).sin_cos();
    0.5 * (s0 + s1 * c + s2 * s)
}

#[inline]
fn angle_intensity(s0: f64, s1: f64, s2: f64, a: Angle) -> f64 {
    // Exact trig values at the four sampled orientations.
    match a {
        Angle::A0 => 0.5 * (s0 + s1),
        Angle::A45 => 0.5 * (s0 + s2),
        Angle::A90 => 0.5 * (s0 - s1),
        Angle::A135 => 0.5 * (s0 - s2),
    }
}

pub fn stack_from_stokes(stokes: &StokesMaps) -> PolarizationStack {
    let (w, h) = stokes.dims();
    let planes = Angle::ALL.map(|a| {
        PlaneImage::from_fn(w, h, |x, y| {
            angle_intensity(stokes.s0.get(x, y), stokes.s1.get(x, y), stokes.s2.get(x, y), a)
        })
        .expect("stokes dims")
    });
    PolarizationStack::from_planes(planes).expect("same dims")
}

/// Spatially uniform polarization state.
pub fn stack_from_stokes_values(width: usize, height: usize, s0: f64, s1: f64, s2: f64) -> PolarizationStack {
    let planes = Angle::ALL.map(|a| PlaneImage::filled(width, height, angle_intensity(s0, s1, s2, a)).expect("dims"));
    PolarizationStack::from_planes(planes).expect("same dims")
}

/// Degree of linear polarization, clamped to `[0, 1]`.
pub fn dop(stokes: &StokesMaps) -> PlaneImage {
    let (w, h) = stokes.dims();
    PlaneImage::from_fn(w, h, |x, y| {
        let (s0, s1, s2) = (stokes.s0.get(x, y), stokes.s1.get(x, y), stokes.s2.get(x, y));
        (s1.hypot(s2) / s0.max(DOP_FLOOR)).clamp(0.0, 1.0)
    })
    .expect("stokes dims")
}

/// Angle of polarization in degrees, `½·atan2(S2, S1)`, range `(-90, 90]`.
/// Unpolarized pixels map to 0.
pub fn aop(stokes: &StokesMaps) -> PlaneImage {
    stokes
        .s2
        .zip_map(&stokes.s1, |s2, s1| 0.5 * s2.atan2(s1).to_degrees())
        .expect("stokes dims")
}

fn mse(reference: &PlaneImage, test: &PlaneImage) -> Result<f64> {
    ensure_same_dims(reference, test)?;
    let sum: f64 = reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.len() as f64)
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// PSNR in dB; identical inputs give `+inf`.
pub fn psnr(reference: &PlaneImage, test: &PlaneImage, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, test)?, peak))
}

/// Color PSNR with the squared error pooled over the three channels.
pub fn cpsnr(reference: [&PlaneImage; 3], test: [&PlaneImage; 3], peak: f64) -> Result<f64> {
    let mut total = 0.0;
    for (r, t) in reference.iter().zip(&test) {
        ensure_same_dims(reference[0], r)?;
        total += mse(r, t)?;
    }
    Ok(psnr_from_mse(total / 3.0, peak))
}

/// Wraps an angle difference in degrees into `(-90, 90]`.
#[inline]
pub fn wrap_half_turn(d: f64) -> f64 {
    let w = (d + 90.0).rem_euclid(180.0) - 90.0;
    if w == -90.0 {
        90.0
    } else {
        w
    }
}

/// RMSE of AoP differences in degrees, respecting the 180° period.
pub fn angle_rmse(aop_ref: &PlaneImage, aop_test: &PlaneImage) -> Result<f64> {
    ensure_same_dims(aop_ref, aop_test)?;
    let sum: f64 = aop_ref
        .samples()
        .iter()
        .zip(aop_test.samples())
        .map(|(&r, &t)| wrap_half_turn(t - r).powi(2))
        .sum();
    Ok((sum / aop_ref.len() as f64).sqrt())
}

/// One row of the evaluation tables: PSNR (or CPSNR) for the orientation,
/// Stokes and DoP images plus the AoP angle RMSE in degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub i0: f64,
    pub i45: f64,
    pub i90: f64,
    pub i135: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub dop: f64,
    pub aop: f64,
}

impl MetricsRow {
    pub const COLUMNS: [&'static str; 9] = ["I0", "I45", "I90", "I135", "S0", "S1", "S2", "DoP", "AoP"];

    pub fn values(&self) -> [f64; 9] {
        [
            self.i0, self.i45, self.i90, self.i135, self.s0, self.s1, self.s2, self.dop, self.aop,
        ]
    }

    pub fn from_values(v: [f64; 9]) -> Self {
        Self {
            i0: v[0],
            i45: v[1],
            i90: v[2],
            i135: v[3],
            s0: v[4],
            s1: v[5],
            s2: v[6],
            dop: v[7],
            aop: v[8],
        }
    }

    pub fn intensity(&self, a: Angle) -> f64 {
        self.values()[a.index()]
    }

    /// Column-wise arithmetic mean.
    pub fn mean(rows: &[MetricsRow]) -> Option<MetricsRow> {
        if rows.is_empty() {
            return None;
        }
        let mut acc = [0.0; 9];
        for r in rows {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        Some(Self::from_values(acc.map(|a| a / rows.len() as f64)))
    }
}

/// Products derived from one stack, computed once per evaluation.
struct Derived {
    stokes: StokesMaps,
    dop: PlaneImage,
    aop: PlaneImage,
}

impl Derived {
    fn of(stack: &PolarizationStack) -> Self {
        let stokes = stokes_from_stack(stack);
        Self {
            dop: dop(&stokes),
            aop: aop(&stokes),
            stokes,
        }
    }
}

/// Monochrome evaluation of a demosaicked stack against ground truth.
pub fn mpfa_metrics(reference: &PolarizationStack, test: &PolarizationStack) -> Result<MetricsRow> {
    if reference.dims() != test.dims() {
        return Err(Error::DimensionMismatch {
            expected: reference.dims(),
            got: test.dims(),
        });
    }
    let r = Derived::of(reference);
    let t = Derived::of(test);
    let i = |a| psnr(reference.plane(a), test.plane(a), PEAK_INTENSITY);
    Ok(MetricsRow {
        i0: i(Angle::A0)?,
        i45: i(Angle::A45)?,
        i90: i(Angle::A90)?,
        i135: i(Angle::A135)?,
        s0: psnr(&r.stokes.s0, &t.stokes.s0, PEAK_S0)?,
        s1: psnr(&r.stokes.s1, &t.stokes.s1, PEAK_S12)?,
        s2: psnr(&r.stokes.s2, &t.stokes.s2, PEAK_S12)?,
        dop: psnr(&r.dop, &t.dop, PEAK_DOP)?,
        aop: angle_rmse(&r.aop, &t.aop)?,
    })
}

fn tri<'a>(v: &'a [Derived], f: impl Fn(&'a Derived) -> &'a PlaneImage) -> [&'a PlaneImage; 3] {
    [f(&v[0]), f(&v[1]), f(&v[2])]
}

/// Color evaluation: CPSNR per product, AoP error averaged over R, G, B.
pub fn cpfa_metrics(reference: &ColorPolarizationStack, test: &ColorPolarizationStack) -> Result<MetricsRow> {
    if reference.dims() != test.dims() {
        return Err(Error::DimensionMismatch {
            expected: reference.dims(),
            got: test.dims(),
        });
    }
    let r: Vec<Derived> = Color::ALL.iter().map(|&c| Derived::of(reference.channel(c))).collect();
    let t: Vec<Derived> = Color::ALL.iter().map(|&c| Derived::of(test.channel(c))).collect();
    let i = |a: Angle| {
        cpsnr(
            Color::ALL.map(|c| reference.plane(c, a)),
            Color::ALL.map(|c| test.plane(c, a)),
            PEAK_INTENSITY,
        )
    };
    let aop_err = (0..3).map(|c| angle_rmse(&r[c].aop, &t[c].aop)).sum::<Result<f64>>()? / 3.0;
    Ok(MetricsRow {
        i0: i(Angle::A0)?,
        i45: i(Angle::A45)?,
        i90: i(Angle::A90)?,
        i135: i(Angle::A135)?,
        s0: cpsnr(tri(&r, |d| &d.stokes.s0), tri(&t, |d| &d.stokes.s0), PEAK_S0)?,
        s1: cpsnr(tri(&r, |d| &d.stokes.s1), tri(&t, |d| &d.stokes.s1), PEAK_S12)?,
        s2: cpsnr(tri(&r, |d| &d.stokes.s2), tri(&t, |d| &d.stokes.s2), PEAK_S12)?,
        dop: cpsnr(tri(&r, |d| &d.dop), tri(&t, |d| &d.dop), PEAK_DOP)?,
        aop: aop_err,
    })
}
