//! Analytic test scenes built from Stokes fields.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpfa::ColorPolarizationStack;
use crate::error::{Error, Result};
use crate::image::PlaneImage;
use crate::mosaic::{Color, PolarizationStack};
use crate::polar::{stack_from_stokes, StokesMaps};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Constant,
    Ramp,
    Step,
    Disk,
    Sinusoid,
}

impl SceneKind {
    pub const ALL: [SceneKind; 5] = [
        SceneKind::Constant,
        SceneKind::Ramp,
        SceneKind::Step,
        SceneKind::Disk,
        SceneKind::Sinusoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Constant => "constant",
            SceneKind::Ramp => "ramp",
            SceneKind::Step => "step",
            SceneKind::Disk => "disk",
            SceneKind::Sinusoid => "sinusoid",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown scene kind {s:?}")))
    }
}

/// A linear polarization state `(S0, S1, S2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stokes(pub f64, pub f64, pub f64);

impl Stokes {
    pub fn dop(self) -> f64 {
        self.1.hypot(self.2) / self.0
    }

    fn lerp(self, other: Stokes, t: f64) -> Stokes {
        Stokes(
            self.0 + (other.0 - self.0) * t,
            self.1 + (other.1 - self.1) * t,
            self.2 + (other.2 - self.2) * t,
        )
    }

    fn scaled(self, k: f64) -> Stokes {
        Stokes(self.0 * k, self.1 * k, self.2 * k)
    }
}

/// Scene geometry. `primary` is the constant value, the ramp's left end,
/// the step's left side, the disk interior and the sinusoid's crest;
/// `secondary` is the other state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub primary: Stokes,
    pub secondary: Stokes,
    /// First column of the right side of a step.
    pub edge_column: f64,
    /// Disk center and radius in pixels.
    pub center: (f64, f64),
    pub radius: f64,
    /// Sinusoid period in pixels and direction in degrees from the x axis.
    pub period: f64,
    pub orientation: f64,
    /// Half-width of uniform noise added to each Stokes component.
    pub noise: f64,
    /// Per-color gains for twelve-plane scenes.
    pub color_gains: [f64; 3],
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            primary: Stokes(1.0, 0.3, 0.2),
            secondary: Stokes(0.6, -0.2, 0.1),
            edge_column: 32.0,
            center: (32.0, 32.0),
            radius: 16.0,
            period: 16.0,
            orientation: 0.0,
            noise: 0.0,
            color_gains: [0.8, 1.0, 0.6],
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParams(format!(
                "scene dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        for s in [self.primary, self.secondary] {
            if s.0.is_nan() || s.0 <= 0.0 || s.1.hypot(s.2) > s.0 * (1.0 + 1e-12) {
                return Err(Error::InvalidParams(format!(
                    "Stokes state {s:?} needs S0 > 0 and sqrt(S1²+S2²) <= S0"
                )));
            }
        }
        let non_negative = |v: f64| v >= 0.0;
        if self.period.is_nan() || self.period <= 0.0 || !non_negative(self.radius) || !non_negative(self.noise) {
            return Err(Error::InvalidParams(
                "period must be positive; radius and noise non-negative".into(),
            ));
        }
        if !self.color_gains.iter().all(|&g| non_negative(g)) {
            return Err(Error::InvalidParams("color gains must be non-negative".into()));
        }
        Ok(())
    }

    /// Noise-free Stokes state at pixel `(x, y)`.
    pub fn stokes_at(&self, kind: SceneKind, x: usize, y: usize) -> Stokes {
        let (xf, yf) = (x as f64, y as f64);
        match kind {
            SceneKind::Constant => self.primary,
            SceneKind::Ramp => {
                let t = if self.width > 1 {
                    xf / (self.width - 1) as f64
                } else {
                    0.0
                };
                self.primary.lerp(self.secondary, t)
            }
            SceneKind::Step => {
                if xf < self.edge_column {
                    self.primary
                } else {
                    self.secondary
                }
            }
            SceneKind::Disk => {
                if (xf - self.center.0).hypot(yf - self.center.1) <= self.radius {
                    self.primary
                } else {
                    self.secondary
                }
            }
            SceneKind::Sinusoid => {
                let th = self.orientation.to_radians();
                let phase = 2.0 * PI * (xf * th.cos() + yf * th.sin()) / self.period;
                self.secondary.lerp(self.primary, 0.5 * (1.0 + phase.cos()))
            }
        }
    }
}

/// Stokes fields of a scene. Noise is drawn from a ChaCha8 stream seeded by
/// `seed`, in row-major order, three draws per pixel.
pub fn synth_stokes(kind: SceneKind, params: &SynthParams, seed: u64) -> Result<StokesMaps> {
    params.validate()?;
    let (w, h) = (params.width, params.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planes = [(); 3].map(|_| Vec::with_capacity(w * h));
    for y in 0..h {
        for x in 0..w {
            let s = params.stokes_at(kind, x, y);
            let mut v = [s.0, s.1, s.2];
            if params.noise > 0.0 {
                for c in &mut v {
                    *c += rng.random_range(-params.noise..=params.noise);
                }
            }
            for (p, c) in planes.iter_mut().zip(v) {
                p.push(c);
            }
        }
    }
    let [s0, s1, s2] = planes;
    StokesMaps::new(
        PlaneImage::from_vec(w, h, s0)?,
        PlaneImage::from_vec(w, h, s1)?,
        PlaneImage::from_vec(w, h, s2)?,
    )
}

/// Four-orientation scene with `I_θ = (S0 + S1·cos2θ + S2·sin2θ) / 2`.
pub fn synth_scene(kind: SceneKind, params: &SynthParams, seed: u64) -> Result<PolarizationStack> {
    Ok(stack_from_stokes(&synth_stokes(kind, params, seed)?))
}

/// Twelve-plane scene: the same geometry per color, scaled by the color
/// gains, with an independent noise stream per color.
pub fn synth_color_scene(kind: SceneKind, params: &SynthParams, seed: u64) -> Result<ColorPolarizationStack> {
    let mut channels = Vec::with_capacity(3);
    for c in Color::ALL {
        let g = params.color_gains[c.index()];
        let p = SynthParams {
            primary: params.primary.scaled(g),
            secondary: params.secondary.scaled(g),
            noise: params.noise * g,
            ..params.clone()
        };
        if g == 0.0 {
            let zero = PlaneImage::new(params.width, params.height)?;
            channels.push(PolarizationStack::uniform(&zero));
            continue;
        }
        channels.push(synth_scene(kind, &p, seed.wrapping_add(c.index() as u64))?);
    }
    ColorPolarizationStack::new(channels.try_into().expect("three colors"))
}

/// Random polarized step or disk scene, as used in the edge-awareness suite.
/// Both sides differ in intensity and in polarization state.
pub fn random_edge_scene(width: usize, height: usize, seed: u64) -> Result<(SceneKind, SynthParams)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = |rng: &mut ChaCha8Rng| {
        let s0 = rng.random_range(0.3..1.0);
        let dop = rng.random_range(0.3..0.9);
        let aop: f64 = rng.random_range(-90.0f64..90.0).to_radians();
        Stokes(s0, s0 * dop * (2.0 * aop).cos(), s0 * dop * (2.0 * aop).sin())
    };
    let primary = state(&mut rng);
    let mut secondary = state(&mut rng);
    while (secondary.0 - primary.0).abs() < 0.15 {
        secondary = state(&mut rng);
    }
    let kind = if rng.random_bool(0.5) {
        SceneKind::Step
    } else {
        SceneKind::Disk
    };
    let (wf, hf) = (width as f64, height as f64);
    let params = SynthParams {
        width,
        height,
        primary,
        secondary,
        edge_column: rng.random_range(0.3 * wf..0.7 * wf).floor(),
        center: (
            rng.random_range(0.35 * wf..0.65 * wf),
            rng.random_range(0.35 * hf..0.65 * hf),
        ),
        radius: rng.random_range(0.15..0.3) * wf.min(hf),
        noise: 0.0,
        ..SynthParams::default()
    };
    Ok((kind, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mosaic::Angle;
    use crate::polar::{dop, stokes_from_stack};

    #[test]
    fn constant_scene_intensities() {
        let p = SynthParams {
            width: 3,
            height: 2,
            primary: Stokes(1.0, 0.3, 0.2),
            ..SynthParams::default()
        };
        let s = synth_scene(SceneKind::Constant, &p, 0).unwrap();
        for (a, want) in Angle::ALL.into_iter().zip([0.65, 0.6, 0.35, 0.4]) {
            assert!(s.plane(a).samples().iter().all(|v| (v - want).abs() < 1e-15), "{a}");
        }
    }

    #[test]
    fn dop_matches_analytic_field() {
        for kind in SceneKind::ALL {
            let p = SynthParams::default();
            let s = synth_scene(kind, &p, 3).unwrap();
            let d = dop(&stokes_from_stack(&s));
            for y in 0..p.height {
                for x in 0..p.width {
                    let want = p.stokes_at(kind, x, y).dop();
                    assert!((d.get(x, y) - want).abs() < 1e-12, "{kind} ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let p = SynthParams {
            noise: 0.01,
            ..SynthParams::default()
        };
        let a = synth_scene(SceneKind::Disk, &p, 11).unwrap();
        assert_eq!(a, synth_scene(SceneKind::Disk, &p, 11).unwrap());
        assert_ne!(a, synth_scene(SceneKind::Disk, &p, 12).unwrap());
        let c = synth_color_scene(SceneKind::Ramp, &p, 5).unwrap();
        assert_eq!(c, synth_color_scene(SceneKind::Ramp, &p, 5).unwrap());
    }

    #[test]
    fn step_places_edge() {
        let p = SynthParams {
            width: 8,
            height: 2,
            edge_column: 5.0,
            ..SynthParams::default()
        };
        let s = synth_stokes(SceneKind::Step, &p, 0).unwrap();
        assert_eq!(s.s0.get(4, 1), 1.0);
        assert_eq!(s.s0.get(5, 1), 0.6);
    }

    #[test]
    fn invalid_params() {
        let bad = [
            SynthParams {
                width: 0,
                ..SynthParams::default()
            },
            SynthParams {
                primary: Stokes(0.5, 0.5, 0.5),
                ..SynthParams::default()
            },
            SynthParams {
                period: 0.0,
                ..SynthParams::default()
            },
        ];
        for p in bad {
            assert!(matches!(
                synth_scene(SceneKind::Ramp, &p, 0),
                Err(Error::InvalidParams(_))
            ));
        }
        assert!("spiral".parse::<SceneKind>().is_err());
    }

    #[test]
    fn edge_scenes_are_physical() {
        for seed in 0..20 {
            let (kind, p) = random_edge_scene(48, 40, seed).unwrap();
            assert!(matches!(kind, SceneKind::Step | SceneKind::Disk));
            let s = synth_scene(kind, &p, seed).unwrap();
            for a in Angle::ALL {
                let (lo, hi) = s.plane(a).min_max();
                assert!(lo >= 0.0 && hi <= 1.0, "seed {seed}: [{lo}, {hi}]");
            }
        }
    }
}
