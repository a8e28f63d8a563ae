//! AoP-DoP false-color rendering.
//!
//! Hue encodes AoP (twice the angle, so the 180° period of AoP wraps once
//! around the color wheel and 0° is red), saturation encodes DoP, and value
//! is either 1 or the normalized intensity `S0 / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::PlaneImage;
use crate::polar::{aop, dop, StokesMaps};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VizMode {
    #[default]
    Flat,
    Intensity,
}

impl std::str::FromStr for VizMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(VizMode::Flat),
            "intensity" => Ok(VizMode::Intensity),
            _ => Err(Error::InvalidParams(format!("unknown viz mode {s:?} (flat|intensity)"))),
        }
    }
}

/// Hue in degrees `[0, 360)` for an AoP in degrees.
#[inline]
pub fn aop_hue(aop_deg: f64) -> f64 {
    (2.0 * aop_deg).rem_euclid(360.0)
}

/// HSV to RGB, all components in `[0, 1]` except hue in degrees.
pub fn hsv_to_rgb(hue: f64, sat: f64, val: f64) -> [f64; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let s = sat.clamp(0.0, 1.0);
    let v = val.clamp(0.0, 1.0);
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Per-pixel color for one AoP/DoP/value triple.
pub fn aop_dop_color(aop_deg: f64, dop: f64, value: f64) -> [f64; 3] {
    hsv_to_rgb(aop_hue(aop_deg), dop, value)
}

pub fn render_aop_dop(stokes: &StokesMaps, mode: VizMode) -> [PlaneImage; 3] {
    let a = aop(stokes);
    let d = dop(stokes);
    let (w, h) = stokes.dims();
    let mut out = [(); 3].map(|_| PlaneImage::new(w, h).expect("stokes dims"));
    for y in 0..h {
        for x in 0..w {
            let value = match mode {
                VizMode::Flat => 1.0,
                VizMode::Intensity => (stokes.s0.get(x, y) / 2.0).clamp(0.0, 1.0),
            };
            let rgb = aop_dop_color(a.get(x, y), d.get(x, y), value);
            for (p, v) in out.iter_mut().zip(rgb) {
                p.set(x, y, v);
            }
        }
    }
    out
}

/// Color-wheel legend: AoP along x (-90° to 90°), DoP along y (1 at top).
pub fn legend(width: usize, height: usize) -> Result<[PlaneImage; 3]> {
    let mut out = [
        PlaneImage::new(width, height)?,
        PlaneImage::new(width, height)?,
        PlaneImage::new(width, height)?,
    ];
    for y in 0..height {
        for x in 0..width {
            let aop = -90.0 + 180.0 * (x as f64 + 0.5) / width as f64;
            let dop = 1.0 - y as f64 / (height.max(2) - 1) as f64;
            for (p, v) in out.iter_mut().zip(aop_dop_color(aop, dop, 1.0)) {
                p.set(x, y, v);
            }
        }
    }
    Ok(out)
}
