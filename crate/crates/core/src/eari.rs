//! Edge-aware guide image generation from raw MPFA data.
//!
//! For each of four directions (north, east, west, south) the raw mosaic is
//! filtered twice: once by `F_k` to get an intensity estimate `X_k` (half of
//! the directional S0 estimate, so it sits in the pixel value range) and once
//! by `H_k` to get the disagreement `Δ_k` between the two S0 estimates built
//! from the (0°, 90°) and (45°, 135°) pairs. Both estimates agree unless an
//! intensity or polarization edge runs through the support, so `|Δ_k|`,
//! smoothed over a 5x5 one-sided window `M_k`, penalizes directions that
//! cross edges. The guide is the per-pixel weighted mean of the `X_k` with
//! weights `1 / (Δ'_k + ε)`.
//!
//! Every kernel is position-independent: it yields the right combination at
//! any pixel of any 2x2 four-angle layout, so no pattern argument is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{convolve, BorderMode, Kernel2D, PlaneImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    East,
    West,
    South,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::West, Direction::South];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Direction::North => 'n',
            Direction::East => 'e',
            Direction::West => 'w',
            Direction::South => 's',
        }
    }
}

const E: f64 = 0.125;
const Q: f64 = 0.25;
const H: f64 = 0.5;

/// Directional intensity kernel `F_k`.
pub fn estimate_kernel(dir: Direction) -> Kernel2D {
    match dir {
        Direction::North => Kernel2D::from_rows([[E, Q, E], [E, Q, E], [0.0, 0.0, 0.0]]),
        Direction::East => Kernel2D::from_rows([[0.0, E, E], [0.0, Q, Q], [0.0, E, E]]),
        Direction::West => Kernel2D::from_rows([[E, E, 0.0], [Q, Q, 0.0], [E, E, 0.0]]),
        Direction::South => Kernel2D::from_rows([[0.0, 0.0, 0.0], [E, Q, E], [E, Q, E]]),
    }
}

/// Directional difference kernel `H_k`.
///
/// Each kernel is `(cross pair) - (center pair)`: the center sample plus the
/// mean of its two diagonal neighbours on the `k` side carries one
/// orthogonal pair, the adjacent sample toward `k` plus the mean of the two
/// samples beside it carries the other. East is the mirror image of west.
pub fn difference_kernel(dir: Direction) -> Kernel2D {
    match dir {
        Direction::North => Kernel2D::from_rows([[-H, 1.0, -H], [H, -1.0, H], [0.0, 0.0, 0.0]]),
        Direction::East => Kernel2D::from_rows([[0.0, H, -H], [0.0, -1.0, 1.0], [0.0, H, -H]]),
        Direction::West => Kernel2D::from_rows([[-H, H, 0.0], [1.0, -1.0, 0.0], [-H, H, 0.0]]),
        Direction::South => Kernel2D::from_rows([[0.0, 0.0, 0.0], [H, -1.0, H], [-H, 1.0, -H]]),
    }
}

/// Footprint of the 5x5 smoothing kernel `M_k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// Uniform over the half-window toward `k` plus the center row/column
    /// (15 taps).
    #[default]
    OneSided,
    /// Uniform over the full 5x5 window.
    Full,
}

impl std::str::FromStr for Smoothing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onesided" | "one-sided" => Ok(Smoothing::OneSided),
            "full" => Ok(Smoothing::Full),
            _ => Err(Error::InvalidParams(format!("unknown smoothing {s:?} (onesided|full)"))),
        }
    }
}

pub fn smoothing_kernel(dir: Direction, smoothing: Smoothing) -> Kernel2D {
    let inside = |r: usize, c: usize| match smoothing {
        Smoothing::Full => true,
        Smoothing::OneSided => match dir {
            Direction::North => r <= 2,
            Direction::South => r >= 2,
            Direction::West => c <= 2,
            Direction::East => c >= 2,
        },
    };
    let n = (0..25).filter(|i| inside(i / 5, i % 5)).count() as f64;
    let taps = (0..25)
        .map(|i| if inside(i / 5, i % 5) { 1.0 / n } else { 0.0 })
        .collect();
    Kernel2D::new(5, taps).expect("5x5")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EariParams {
    /// Offset keeping the weights finite where `Δ'_k` vanishes.
    pub epsilon: f64,
    pub smoothing: Smoothing,
}

impl Default for EariParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-32,
            smoothing: Smoothing::OneSided,
        }
    }
}

impl EariParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Intermediate planes for one direction.
#[derive(Clone, Debug)]
pub struct DirectionalField {
    pub direction: Direction,
    pub estimate: PlaneImage,
    pub difference: PlaneImage,
    pub smoothed_difference: PlaneImage,
    pub weight: PlaneImage,
}

pub fn directional_estimates(raw: &PlaneImage) -> [PlaneImage; 4] {
    Direction::ALL.map(|d| convolve(raw, &estimate_kernel(d), BorderMode::Replicate))
}

pub fn directional_differences(raw: &PlaneImage) -> [PlaneImage; 4] {
    Direction::ALL.map(|d| convolve(raw, &difference_kernel(d), BorderMode::Replicate))
}

pub fn smooth_abs_differences(difference: &PlaneImage, dir: Direction, smoothing: Smoothing) -> PlaneImage {
    convolve(
        &difference.map(f64::abs),
        &smoothing_kernel(dir, smoothing),
        BorderMode::Replicate,
    )
}

pub fn directional_weights(smoothed: &PlaneImage, params: &EariParams) -> PlaneImage {
    let eps = params.epsilon;
    smoothed.map(|d| 1.0 / (d + eps))
}

/// All intermediate planes, for inspection.
pub fn directional_fields(raw: &PlaneImage, params: &EariParams) -> [DirectionalField; 4] {
    let estimates = directional_estimates(raw);
    let differences = directional_differences(raw);
    Direction::ALL.map(|d| {
        let smoothed = smooth_abs_differences(&differences[d.index()], d, params.smoothing);
        DirectionalField {
            direction: d,
            estimate: estimates[d.index()].clone(),
            difference: differences[d.index()].clone(),
            weight: directional_weights(&smoothed, params),
            smoothed_difference: smoothed,
        }
    })
}

/// Rows and columns covered by `M_k`, relative to the center.
fn smoothing_extent(dir: Direction, smoothing: Smoothing) -> ((isize, isize), (isize, isize)) {
    match (smoothing, dir) {
        (Smoothing::Full, _) => ((-2, 2), (-2, 2)),
        (Smoothing::OneSided, Direction::North) => ((-2, 0), (-2, 2)),
        (Smoothing::OneSided, Direction::South) => ((0, 2), (-2, 2)),
        (Smoothing::OneSided, Direction::West) => ((-2, 2), (-2, 0)),
        (Smoothing::OneSided, Direction::East) => ((-2, 2), (0, 2)),
    }
}

/// Mean over a rectangle of offsets with replicated borders, as two 1D passes.
fn rect_mean(data: &[f64], w: usize, h: usize, rows: (isize, isize), cols: (isize, isize)) -> Vec<f64> {
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let col_idx: Vec<Vec<usize>> = (cols.0..=cols.1)
        .map(|c| (0..w).map(|x| clamp(x as isize + c, w)).collect())
        .collect();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        let dst = &mut tmp[y * w..(y + 1) * w];
        for idx in &col_idx {
            for (d, &i) in dst.iter_mut().zip(idx) {
                *d += src[i];
            }
        }
    }
    let n = ((rows.1 - rows.0 + 1) * (cols.1 - cols.0 + 1)) as f64;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for r in rows.0..=rows.1 {
            let yy = clamp(y as isize + r, h);
            for (d, s) in dst.iter_mut().zip(&tmp[yy * w..(yy + 1) * w]) {
                *d += s;
            }
        }
        for d in dst.iter_mut() {
            *d /= n;
        }
    }
    out
}

/// `X_k` and `Δ'_k` for all four directions in one pass over 3x3
/// neighborhoods, followed by separable box sums.
fn fused_fields(raw: &PlaneImage, smoothing: Smoothing) -> ([Vec<f64>; 4], [Vec<f64>; 4]) {
    let (w, h) = raw.dims();
    let (pw, ph) = (w + 2, h + 2);
    let padded: Vec<f64> = (0..ph)
        .flat_map(|y| (0..pw).map(move |x| (x, y)))
        .map(|(x, y)| raw.get(x.saturating_sub(1).min(w - 1), y.saturating_sub(1).min(h - 1)))
        .collect();

    let n = w * h;
    let mut est = [(); 4].map(|_| vec![0.0; n]);
    let mut diff = [(); 4].map(|_| vec![0.0; n]);
    for y in 0..h {
        let up = &padded[y * pw..(y + 1) * pw];
        let mid = &padded[(y + 1) * pw..(y + 2) * pw];
        let dn = &padded[(y + 2) * pw..(y + 3) * pw];
        for x in 0..w {
            let i = y * w + x;
            let (l, c, r) = (x, x + 1, x + 2);
            let center = mid[c];
            // Center pair and cross pair for each direction.
            let pairs = [
                (center + 0.5 * (up[l] + up[r]), up[c] + 0.5 * (mid[l] + mid[r])),
                (center + 0.5 * (up[r] + dn[r]), mid[r] + 0.5 * (up[c] + dn[c])),
                (center + 0.5 * (up[l] + dn[l]), mid[l] + 0.5 * (up[c] + dn[c])),
                (center + 0.5 * (dn[l] + dn[r]), dn[c] + 0.5 * (mid[l] + mid[r])),
            ];
            for (k, (a, b)) in pairs.into_iter().enumerate() {
                est[k][i] = 0.25 * (a + b);
                diff[k][i] = (b - a).abs();
            }
        }
    }

    let smoothed = Direction::ALL.map(|d| {
        let (rows, cols) = smoothing_extent(d, smoothing);
        rect_mean(&diff[d.index()], w, h, rows, cols)
    });
    (est, smoothed)
}

/// Edge-aware guide `G = Σ W_k X_k / Σ W_k`.
///
/// Agrees with the kernel-by-kernel evaluation in [`directional_fields`]
/// to rounding, except that where `Δ'_k` is zero the weights amplify that
/// rounding.
pub fn guide_image(raw: &PlaneImage, params: &EariParams) -> Result<PlaneImage> {
    params.validate()?;
    let (w, h) = raw.dims();
    let (est, smoothed) = fused_fields(raw, params.smoothing);
    let eps = params.epsilon;
    let mut out = vec![0.0; w * h];
    for (i, g) in out.iter_mut().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..4 {
            let wk = 1.0 / (smoothed[k][i] + eps);
            num += wk * est[k][i];
            den += wk;
        }
        *g = num / den;
    }
    PlaneImage::from_vec(w, h, out)
}

/// Non-directional 3x3 averaging kernel: the `[1 2 1]^T [1 2 1] / 16` tent,
/// which weighs the four orientations equally at every pixel of a 2x2
/// mosaic and so also estimates `S0 / 2`.
pub fn averaging_kernel() -> Kernel2D {
    Kernel2D::from_rows([
        [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
        [2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0],
        [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
    ])
}

/// Guide without edge awareness, for ablation.
pub fn averaging_guide(raw: &PlaneImage) -> PlaneImage {
    convolve(raw, &averaging_kernel(), BorderMode::Replicate)
}
