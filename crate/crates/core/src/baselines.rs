//! Reference demosaickers: bilinear/bicubic MPFA interpolation, per-lattice
//! bilinear CPFA interpolation, and Bayer color demosaicking.

use serde::{Deserialize, Serialize};

use crate::cpfa::ColorPolarizationStack;
use crate::error::{Error, Result};
use crate::image::{convolve, BorderMode, Kernel2D, PlaneImage};
use crate::lattice::{lattice_bicubic, lattice_bilinear, two_pass_linear, Lattice};
use crate::mosaic::{color_angle_mask, Angle, BayerPattern, Color, CpfaPattern, MpfaPattern, PolarizationStack};

fn per_orientation(
    raw: &PlaneImage,
    pat: &MpfaPattern,
    interp: fn(&PlaneImage, Lattice) -> Result<PlaneImage>,
) -> Result<PolarizationStack> {
    let planes = Angle::ALL
        .iter()
        .map(|&a| {
            let (ox, oy) = pat.offset_of(a);
            interp(raw, Lattice { ox, oy, sx: 2, sy: 2 })
        })
        .collect::<Result<Vec<_>>>()?;
    PolarizationStack::from_planes(planes.try_into().expect("four orientations"))
}

pub fn demosaick_mpfa_bilinear(raw: &PlaneImage, pat: &MpfaPattern) -> Result<PolarizationStack> {
    per_orientation(raw, pat, lattice_bilinear)
}

/// Catmull-Rom (a = -0.5) separable interpolation of each orientation.
pub fn demosaick_mpfa_bicubic(raw: &PlaneImage, pat: &MpfaPattern) -> Result<PolarizationStack> {
    per_orientation(raw, pat, lattice_bicubic)
}

/// Bilinear interpolation of each of the twelve (color, angle) lattices of
/// a CPFA mosaic. R and B lattices are rectangular with stride 4; the G
/// lattices are quincunx-like and go through [`two_pass_linear`].
pub fn demosaick_cpfa_bilinear12(raw: &PlaneImage, pat: &CpfaPattern) -> Result<ColorPolarizationStack> {
    let (w, h) = raw.dims();
    ColorPolarizationStack::try_from_fn(w, h, |c, a| two_pass_linear(raw, &color_angle_mask(pat, w, h, c, a)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BayerMethod {
    Bilinear,
    /// Bilinear plus the 5x5 gradient corrections of Malvar, He and Cutler.
    #[default]
    #[serde(alias = "gradient_corrected")]
    Gradient,
}

impl std::str::FromStr for BayerMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(BayerMethod::Bilinear),
            "gradient" | "gradient_corrected" | "mhc" => Ok(BayerMethod::Gradient),
            _ => Err(Error::InvalidParams(format!(
                "unknown color method {s:?} (bilinear|gradient)"
            ))),
        }
    }
}

impl std::fmt::Display for BayerMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BayerMethod::Bilinear => "bilinear",
            BayerMethod::Gradient => "gradient",
        })
    }
}

// Gradient-corrected taps, all scaled by 1/8.
const MHC_G_AT_RB: [[f64; 5]; 5] = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [-1.0, 2.0, 4.0, 2.0, -1.0],
    [0.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];
/// R (or B) at a G site whose left/right neighbours carry that color.
const MHC_FROM_ROW: [[f64; 5]; 5] = [
    [0.0, 0.0, 0.5, 0.0, 0.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [-1.0, 4.0, 5.0, 4.0, -1.0],
    [0.0, -1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0],
];
/// R (or B) at a G site whose up/down neighbours carry that color.
const MHC_FROM_COL: [[f64; 5]; 5] = [
    [0.0, 0.0, -1.0, 0.0, 0.0],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.5, 0.0, 5.0, 0.0, 0.5],
    [0.0, -1.0, 4.0, -1.0, 0.0],
    [0.0, 0.0, -1.0, 0.0, 0.0],
];
/// R at B sites and B at R sites.
const MHC_DIAGONAL: [[f64; 5]; 5] = [
    [0.0, 0.0, -1.5, 0.0, 0.0],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [-1.5, 0.0, 6.0, 0.0, -1.5],
    [0.0, 2.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, -1.5, 0.0, 0.0],
];

pub(crate) fn mhc_kernels() -> [Kernel2D; 4] {
    [MHC_G_AT_RB, MHC_FROM_ROW, MHC_FROM_COL, MHC_DIAGONAL].map(|k| Kernel2D::from_rows(k).scaled(0.125))
}

fn masked(raw: &PlaneImage, pat: &BayerPattern, c: Color) -> PlaneImage {
    let (w, h) = raw.dims();
    PlaneImage::from_fn(w, h, |x, y| if pat.color_at(x, y) == c { raw.get(x, y) } else { 0.0 }).expect("raw dims")
}

/// Demosaicks a Bayer mosaic into `[R, G, B]`. Measured samples pass
/// through unchanged. Borders mirror without repeating the edge so the
/// color parity of the padded mosaic is preserved.
pub fn demosaick_bayer(raw: &PlaneImage, pat: &BayerPattern, method: BayerMethod) -> [PlaneImage; 3] {
    let border = BorderMode::Reflect101;
    let cross = Kernel2D::from_rows([[0.0, 0.25, 0.0], [0.25, 1.0, 0.25], [0.0, 0.25, 0.0]]);
    let tent = Kernel2D::from_rows([[0.25, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 0.25]]);
    let mut out = [
        convolve(&masked(raw, pat, Color::R), &tent, border),
        convolve(&masked(raw, pat, Color::G), &cross, border),
        convolve(&masked(raw, pat, Color::B), &tent, border),
    ];
    let (w, h) = raw.dims();

    if method == BayerMethod::Gradient && w > 1 && h > 1 {
        let [kg, krow, kcol, kdiag] = mhc_kernels();
        let g_at = convolve(raw, &kg, border);
        let from_row = convolve(raw, &krow, border);
        let from_col = convolve(raw, &kcol, border);
        let diag = convolve(raw, &kdiag, border);
        for y in 0..h {
            for x in 0..w {
                let here = pat.color_at(x, y);
                match here {
                    Color::G => {
                        let row_color = pat.color_at(x + 1, y);
                        let col_color = pat.color_at(x, y + 1);
                        out[row_color.index()].set(x, y, from_row.get(x, y));
                        out[col_color.index()].set(x, y, from_col.get(x, y));
                    }
                    Color::R | Color::B => {
                        let other = if here == Color::R { Color::B } else { Color::R };
                        out[Color::G.index()].set(x, y, g_at.get(x, y));
                        out[other.index()].set(x, y, diag.get(x, y));
                    }
                }
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let c = pat.color_at(x, y);
            out[c.index()].set(x, y, raw.get(x, y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mosaic::mosaic_mpfa;

    fn bayer_mosaic(planes: &[PlaneImage; 3], pat: &BayerPattern) -> PlaneImage {
        let (w, h) = planes[0].dims();
        PlaneImage::from_fn(w, h, |x, y| planes[pat.color_at(x, y).index()].get(x, y)).unwrap()
    }

    #[test]
    fn mhc_kernels_are_normalized() {
        for k in mhc_kernels() {
            assert_eq!(k.sum(), 1.0);
        }
    }

    #[test]
    fn constant_mosaics() {
        let raw = PlaneImage::filled(10, 8, 0.3).unwrap();
        let pat = MpfaPattern::default();
        for out in [
            demosaick_mpfa_bilinear(&raw, &pat).unwrap(),
            demosaick_mpfa_bicubic(&raw, &pat).unwrap(),
        ] {
            for p in out.planes() {
                assert!(p.samples().iter().all(|v| (v - 0.3).abs() < 1e-15));
            }
        }
        for m in [BayerMethod::Bilinear, BayerMethod::Gradient] {
            for p in demosaick_bayer(&raw, &BayerPattern::RGGB, m) {
                assert!(p.samples().iter().all(|v| (v - 0.3).abs() < 1e-15), "{m}");
            }
        }
        let out = demosaick_cpfa_bilinear12(&raw, &CpfaPattern::default()).unwrap();
        for c in Color::ALL {
            for a in Angle::ALL {
                assert!(out.plane(c, a).samples().iter().all(|v| (v - 0.3).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn bilinear_affine_exact_inside() {
        let f = |x: usize, y: usize| 0.2 + 0.02 * x as f64 + 0.01 * y as f64;
        let img = PlaneImage::from_fn(12, 12, f).unwrap();
        let pat = MpfaPattern::default();
        let out = demosaick_mpfa_bilinear(&mosaic_mpfa(&PolarizationStack::uniform(&img), &pat), &pat).unwrap();
        for p in out.planes() {
            for y in 1..11 {
                for x in 1..11 {
                    assert!((p.get(x, y) - f(x, y)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn bicubic_quadratic_exact_inside() {
        let f = |x: usize, _y: usize| 0.1 + 0.03 * x as f64 - 0.001 * (x * x) as f64;
        let img = PlaneImage::from_fn(16, 8, f).unwrap();
        let pat = MpfaPattern::default();
        let out = demosaick_mpfa_bicubic(&mosaic_mpfa(&PolarizationStack::uniform(&img), &pat), &pat).unwrap();
        for p in out.planes() {
            for y in 0..8 {
                for x in 3..13 {
                    assert!((p.get(x, y) - f(x, y)).abs() < 1e-14, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn bayer_pure_red_ramp() {
        let (w, h) = (12, 10);
        let ramp = PlaneImage::from_fn(w, h, |x, y| 0.05 * x as f64 + 0.02 * y as f64).unwrap();
        let zero = PlaneImage::new(w, h).unwrap();
        let pat = BayerPattern::RGGB;
        let raw = bayer_mosaic(&[ramp.clone(), zero.clone(), zero.clone()], &pat);
        // Direct lattice oracle for the red plane.
        let oracle = lattice_bilinear(
            &raw,
            Lattice {
                ox: 0,
                oy: 0,
                sx: 2,
                sy: 2,
            },
        )
        .unwrap();
        for m in [BayerMethod::Bilinear, BayerMethod::Gradient] {
            let [r, g, b] = demosaick_bayer(&raw, &pat, m);
            for y in 2..h - 2 {
                for x in 2..w - 2 {
                    assert!((r.get(x, y) - oracle.get(x, y)).abs() < 1e-14, "{m} R ({x},{y})");
                    assert!((r.get(x, y) - ramp.get(x, y)).abs() < 1e-14);
                    assert!(g.get(x, y).abs() < 1e-14 && b.get(x, y).abs() < 1e-14, "{m}");
                }
            }
            if m == BayerMethod::Bilinear {
                assert!(g.samples().iter().chain(b.samples()).all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn bayer_knot_fidelity() {
        let raw = PlaneImage::from_fn(9, 7, |x, y| ((x * 7 + y * 3) % 5) as f64 / 5.0).unwrap();
        for pat in ["RGGB", "GBRG", "BGGR", "GRBG"] {
            let pat: BayerPattern = pat.parse().unwrap();
            for m in [BayerMethod::Bilinear, BayerMethod::Gradient] {
                let out = demosaick_bayer(&raw, &pat, m);
                for y in 0..7 {
                    for x in 0..9 {
                        assert_eq!(out[pat.color_at(x, y).index()].get(x, y), raw.get(x, y));
                    }
                }
            }
        }
    }
}
