//! Color polarization (quad-Bayer CPFA) demosaicking.
//!
//! The raw mosaic is split into four half-resolution Bayer mosaics, one per
//! polarizer angle. Each is color-demosaicked, the results are put back at
//! the full-resolution sites they came from to form one dense MPFA mosaic
//! per color, and each of those is finished by an MPFA demosaicker.

use crate::baselines::{demosaick_bayer, BayerMethod};
use crate::eari::EariParams;
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, PlaneImage};
use crate::mosaic::{Angle, BayerPattern, Color, CpfaPattern, MpfaPattern, PolarizationStack};
use crate::ri::{demosaick_mpfa_eari, GuidedFilterParams};

/// Twelve aligned planes: one [`PolarizationStack`] per color.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorPolarizationStack {
    channels: [PolarizationStack; 3],
}

impl ColorPolarizationStack {
    pub fn new(channels: [PolarizationStack; 3]) -> Result<Self> {
        for c in &channels[1..] {
            if c.dims() != channels[0].dims() {
                return Err(Error::DimensionMismatch {
                    expected: channels[0].dims(),
                    got: c.dims(),
                });
            }
        }
        Ok(Self { channels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(Color, Angle) -> PlaneImage) -> Result<Self> {
        Self::try_from_fn(width, height, |c, a| Ok(f(c, a)))
    }

    pub fn try_from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(Color, Angle) -> Result<PlaneImage>,
    ) -> Result<Self> {
        let mut channels = Vec::with_capacity(3);
        for c in Color::ALL {
            let mut planes = Vec::with_capacity(4);
            for a in Angle::ALL {
                let p = f(c, a)?;
                if p.dims() != (width, height) {
                    return Err(Error::DimensionMismatch {
                        expected: (width, height),
                        got: p.dims(),
                    });
                }
                planes.push(p);
            }
            channels.push(PolarizationStack::from_planes(planes.try_into().expect("four"))?);
        }
        Self::new(channels.try_into().expect("three"))
    }

    #[inline]
    pub fn plane(&self, c: Color, a: Angle) -> &PlaneImage {
        self.channels[c.index()].plane(a)
    }

    #[inline]
    pub fn channel(&self, c: Color) -> &PolarizationStack {
        &self.channels[c.index()]
    }

    pub fn channels(&self) -> &[PolarizationStack; 3] {
        &self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }
}

fn ensure_even(raw: &PlaneImage) -> Result<()> {
    let (w, h) = raw.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::OddDimensions(w, h));
    }
    Ok(())
}

/// Half-resolution Bayer mosaic of the samples taken at `angle`, with the
/// block color order as its pattern.
pub fn cpfa_extract_bayer(raw: &PlaneImage, pat: &CpfaPattern, angle: Angle) -> Result<(PlaneImage, BayerPattern)> {
    ensure_even(raw)?;
    let (dx, dy) = pat.block().offset_of(angle);
    let (w, h) = raw.dims();
    let half = PlaneImage::from_fn(w / 2, h / 2, |bx, by| raw.get(2 * bx + dx, 2 * by + dy))?;
    Ok((half, pat.bayer()))
}

/// Reassembles four half-resolution RGB images (indexed by angle, then
/// `[R, G, B]`) into one full-resolution MPFA mosaic per color. Pixel `p`
/// of mosaic `c` takes color `c` of the angle-`angle(p)` image at the block
/// holding `p`.
pub fn cpfa_scatter_to_mpfa(rgb: &[[PlaneImage; 3]; 4], pat: &CpfaPattern) -> Result<[PlaneImage; 3]> {
    let (hw, hh) = rgb[0][0].dims();
    for img in rgb.iter().flatten() {
        ensure_same_dims(&rgb[0][0], img)?;
    }
    let block = pat.block();
    let out = Color::ALL.map(|c| {
        PlaneImage::from_fn(2 * hw, 2 * hh, |x, y| {
            rgb[block.angle_at(x, y).index()][c.index()].get(x / 2, y / 2)
        })
        .expect("non-empty")
    });
    Ok(out)
}

/// Generic CPFA pipeline with the final MPFA step supplied by the caller.
pub fn demosaick_cpfa_with(
    raw: &PlaneImage,
    pat: &CpfaPattern,
    color_method: BayerMethod,
    mut mpfa: impl FnMut(&PlaneImage, &MpfaPattern) -> Result<PolarizationStack>,
) -> Result<ColorPolarizationStack> {
    ensure_even(raw)?;
    let mut rgb = Vec::with_capacity(4);
    for a in Angle::ALL {
        let (bayer, bpat) = cpfa_extract_bayer(raw, pat, a)?;
        rgb.push(demosaick_bayer(&bayer, &bpat, color_method));
    }
    let rgb: [[PlaneImage; 3]; 4] = rgb.try_into().expect("four angles");
    let mosaics = cpfa_scatter_to_mpfa(&rgb, pat)?;
    let block = pat.block();
    let channels = mosaics.iter().map(|m| mpfa(m, &block)).collect::<Result<Vec<_>>>()?;
    ColorPolarizationStack::new(channels.try_into().expect("three colors"))
}

/// CPFA demosaicking finished by EARI.
pub fn demosaick_cpfa(
    raw: &PlaneImage,
    pat: &CpfaPattern,
    color_method: BayerMethod,
    eari: &EariParams,
    gf: &GuidedFilterParams,
) -> Result<ColorPolarizationStack> {
    demosaick_cpfa_with(raw, pat, color_method, |m, p| demosaick_mpfa_eari(m, p, eari, gf))
}
