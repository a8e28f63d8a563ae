//! Filter-array layouts, forward mosaicking and sampling masks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cpfa::ColorPolarizationStack;
use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, PlaneImage};

/// Polarizer orientation of a micro-polarizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Angle {
    A0,
    A45,
    A90,
    A135,
}

impl Angle {
    pub const ALL: [Angle; 4] = [Angle::A0, Angle::A45, Angle::A90, Angle::A135];

    pub fn degrees(self) -> u16 {
        match self {
            Angle::A0 => 0,
            Angle::A45 => 45,
            Angle::A90 => 90,
            Angle::A135 => 135,
        }
    }

    pub fn radians(self) -> f64 {
        f64::from(self.degrees()).to_radians()
    }

    /// Position in [`Angle::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// The orthogonal orientation, paired with `self` in `S0 = I_a + I_{a+90}`.
    pub fn orthogonal(self) -> Angle {
        match self {
            Angle::A0 => Angle::A90,
            Angle::A45 => Angle::A135,
            Angle::A90 => Angle::A0,
            Angle::A135 => Angle::A45,
        }
    }

    pub fn from_degrees(deg: u16) -> Result<Self> {
        match deg {
            0 => Ok(Angle::A0),
            45 => Ok(Angle::A45),
            90 => Ok(Angle::A90),
            135 => Ok(Angle::A135),
            _ => Err(Error::InvalidPattern(format!("angle {deg} is not one of 0/45/90/135"))),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degrees())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    R,
    G,
    B,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::R, Color::G, Color::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Color::R => 'R',
            Color::G => 'G',
            Color::B => 'B',
        }
    }

    fn from_letter(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'R' => Ok(Color::R),
            'G' => Ok(Color::G),
            'B' => Ok(Color::B),
            _ => Err(Error::InvalidPattern(format!("unknown color '{c}'"))),
        }
    }
}

/// 2x2 periodic polarizer layout, indexed `[row % 2][col % 2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[[u16; 2]; 2]", into = "[[u16; 2]; 2]")]
pub struct MpfaPattern {
    layout: [[Angle; 2]; 2],
}

impl Default for MpfaPattern {
    /// `[[90, 45], [135, 0]]`, the usual on-chip polarization sensor order.
    fn default() -> Self {
        Self {
            layout: [[Angle::A90, Angle::A45], [Angle::A135, Angle::A0]],
        }
    }
}

impl MpfaPattern {
    pub fn new(layout: [[Angle; 2]; 2]) -> Result<Self> {
        let mut seen = [false; 4];
        for a in layout.iter().flatten() {
            if std::mem::replace(&mut seen[a.index()], true) {
                return Err(Error::InvalidPattern(format!("angle {a} appears twice in {layout:?}")));
            }
        }
        Ok(Self { layout })
    }

    pub fn layout(&self) -> [[Angle; 2]; 2] {
        self.layout
    }

    #[inline]
    pub fn angle_at(&self, x: usize, y: usize) -> Angle {
        self.layout[y & 1][x & 1]
    }

    /// `(col, row)` offset of `angle` within the 2x2 cell.
    pub fn offset_of(&self, angle: Angle) -> (usize, usize) {
        for (dy, row) in self.layout.iter().enumerate() {
            for (dx, &a) in row.iter().enumerate() {
                if a == angle {
                    return (dx, dy);
                }
            }
        }
        unreachable!("validated layouts contain every angle")
    }

    /// The pattern seen when the sensor is read starting `(dx, dy)` pixels in.
    pub fn shifted(&self, dx: usize, dy: usize) -> Self {
        let mut layout = self.layout;
        for (y, row) in layout.iter_mut().enumerate() {
            for (x, cell) in row.iter_mut().enumerate() {
                *cell = self.angle_at(x + dx, y + dy);
            }
        }
        Self { layout }
    }
}

impl TryFrom<[[u16; 2]; 2]> for MpfaPattern {
    type Error = Error;
    fn try_from(t: [[u16; 2]; 2]) -> Result<Self> {
        let a = |d| Angle::from_degrees(d);
        Self::new([[a(t[0][0])?, a(t[0][1])?], [a(t[1][0])?, a(t[1][1])?]])
    }
}

impl From<MpfaPattern> for [[u16; 2]; 2] {
    fn from(p: MpfaPattern) -> Self {
        p.layout.map(|row| row.map(Angle::degrees))
    }
}

impl FromStr for MpfaPattern {
    type Err = Error;
    /// Parses `[[90,45],[135,0]]`.
    fn from_str(s: &str) -> Result<Self> {
        let t: [[u16; 2]; 2] = serde_json::from_str(s).map_err(|e| Error::InvalidPattern(format!("{s:?}: {e}")))?;
        Self::try_from(t)
    }
}

impl fmt::Display for MpfaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.layout;
        write!(f, "[[{},{}],[{},{}]]", l[0][0], l[0][1], l[1][0], l[1][1])
    }
}

/// 2x2 color filter layout with one R, one B and two G cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BayerPattern {
    layout: [[Color; 2]; 2],
}

impl Default for BayerPattern {
    fn default() -> Self {
        Self::RGGB
    }
}

impl BayerPattern {
    pub const RGGB: BayerPattern = BayerPattern {
        layout: [[Color::R, Color::G], [Color::G, Color::B]],
    };

    pub fn new(layout: [[Color; 2]; 2]) -> Result<Self> {
        let count = |c| layout.iter().flatten().filter(|&&x| x == c).count();
        if count(Color::R) != 1 || count(Color::G) != 2 || count(Color::B) != 1 {
            return Err(Error::InvalidPattern(format!("{layout:?} is not a Bayer layout")));
        }
        Ok(Self { layout })
    }

    pub fn layout(&self) -> [[Color; 2]; 2] {
        self.layout
    }

    #[inline]
    pub fn color_at(&self, x: usize, y: usize) -> Color {
        self.layout[y & 1][x & 1]
    }
}

impl FromStr for BayerPattern {
    type Err = Error;
    /// Parses four letters in row-major order, e.g. `RGGB`.
    fn from_str(s: &str) -> Result<Self> {
        let c: Vec<char> = s.chars().collect();
        if c.len() != 4 {
            return Err(Error::InvalidPattern(format!("{s:?}: expected four letters")));
        }
        let col = Color::from_letter;
        Self::new([[col(c[0])?, col(c[1])?], [col(c[2])?, col(c[3])?]])
    }
}

impl fmt::Display for BayerPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.layout.iter().flatten() {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

/// Quad-Bayer color polarization layout: a Bayer arrangement of 2x2
/// single-color blocks, each block carrying all four angles in the same
/// intra-block layout.
///
/// Serialized as a 4x4 table of tokens such as `"R90"`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct CpfaPattern {
    bayer: BayerPattern,
    block: MpfaPattern,
}

impl CpfaPattern {
    pub fn new(bayer: BayerPattern, block: MpfaPattern) -> Self {
        Self { bayer, block }
    }

    pub fn bayer(&self) -> BayerPattern {
        self.bayer
    }

    /// Angle layout inside each 2x2 block, which is also the MPFA layout of
    /// the per-color mosaics the pipeline reassembles.
    pub fn block(&self) -> MpfaPattern {
        self.block
    }

    #[inline]
    pub fn color_at(&self, x: usize, y: usize) -> Color {
        self.bayer.color_at(x >> 1, y >> 1)
    }

    #[inline]
    pub fn angle_at(&self, x: usize, y: usize) -> Angle {
        self.block.angle_at(x, y)
    }

    pub fn table(&self) -> [[(Color, Angle); 4]; 4] {
        let mut t = [[(Color::R, Angle::A0); 4]; 4];
        for (y, row) in t.iter_mut().enumerate() {
            for (x, cell) in row.iter_mut().enumerate() {
                *cell = (self.color_at(x, y), self.angle_at(x, y));
            }
        }
        t
    }

    pub fn from_table(t: [[(Color, Angle); 4]; 4]) -> Result<Self> {
        let block = MpfaPattern::new([[t[0][0].1, t[0][1].1], [t[1][0].1, t[1][1].1]])?;
        let bayer = BayerPattern::new([[t[0][0].0, t[0][2].0], [t[2][0].0, t[2][2].0]])?;
        let pat = Self { bayer, block };
        if pat.table() != t {
            return Err(Error::InvalidPattern(
                "CPFA table must be a Bayer tiling of single-color blocks sharing one angle layout".into(),
            ));
        }
        Ok(pat)
    }
}

impl TryFrom<Vec<Vec<String>>> for CpfaPattern {
    type Error = Error;
    fn try_from(rows: Vec<Vec<String>>) -> Result<Self> {
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(Error::InvalidPattern("CPFA table must be 4x4".into()));
        }
        let mut t = [[(Color::R, Angle::A0); 4]; 4];
        for (y, row) in rows.iter().enumerate() {
            for (x, tok) in row.iter().enumerate() {
                let mut chars = tok.trim().chars();
                let color = Color::from_letter(chars.next().unwrap_or('?'))?;
                let deg: u16 = chars
                    .as_str()
                    .parse()
                    .map_err(|_| Error::InvalidPattern(format!("bad CPFA token {tok:?}")))?;
                t[y][x] = (color, Angle::from_degrees(deg)?);
            }
        }
        Self::from_table(t)
    }
}

impl From<CpfaPattern> for Vec<Vec<String>> {
    fn from(p: CpfaPattern) -> Self {
        p.table()
            .iter()
            .map(|row| row.iter().map(|(c, a)| format!("{}{}", c.letter(), a)).collect())
            .collect()
    }
}

/// Four aligned orientation images, indexed by [`Angle`].
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationStack {
    planes: [PlaneImage; 4],
}

impl PolarizationStack {
    pub fn new(i0: PlaneImage, i45: PlaneImage, i90: PlaneImage, i135: PlaneImage) -> Result<Self> {
        Self::from_planes([i0, i45, i90, i135])
    }

    /// Planes in [`Angle::ALL`] order.
    pub fn from_planes(planes: [PlaneImage; 4]) -> Result<Self> {
        for p in &planes[1..] {
            ensure_same_dims(&planes[0], p)?;
        }
        Ok(Self { planes })
    }

    /// All four orientations equal to `img` (an unpolarized scene with
    /// `S0 = 2 * img`).
    pub fn uniform(img: &PlaneImage) -> Self {
        Self {
            planes: std::array::from_fn(|_| img.clone()),
        }
    }

    #[inline]
    pub fn plane(&self, a: Angle) -> &PlaneImage {
        &self.planes[a.index()]
    }

    pub fn planes(&self) -> &[PlaneImage; 4] {
        &self.planes
    }

    pub fn into_planes(self) -> [PlaneImage; 4] {
        self.planes
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn map(&self, f: impl Fn(&PlaneImage) -> PlaneImage) -> Self {
        Self {
            planes: std::array::from_fn(|i| f(&self.planes[i])),
        }
    }
}

/// Boolean plane marking where a mosaic carries a given sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl SampleMask {
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, bits }
    }

    /// A mask with every pixel valid.
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn and(&self, other: &Self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        }
    }

    pub fn or(&self, other: &Self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect(),
        }
    }
}

pub fn mosaic_mpfa(stack: &PolarizationStack, pat: &MpfaPattern) -> PlaneImage {
    let (w, h) = stack.dims();
    PlaneImage::from_fn(w, h, |x, y| stack.plane(pat.angle_at(x, y)).get(x, y)).expect("stack has valid dims")
}

pub fn mosaic_cpfa(stack: &ColorPolarizationStack, pat: &CpfaPattern) -> PlaneImage {
    let (w, h) = stack.dims();
    if w % 4 != 0 || h % 4 != 0 {
        log::warn!("CPFA mosaic of {w}x{h} does not tile whole 4x4 periods");
    }
    PlaneImage::from_fn(w, h, |x, y| {
        stack.plane(pat.color_at(x, y), pat.angle_at(x, y)).get(x, y)
    })
    .expect("stack has valid dims")
}

pub fn angle_mask(pat: &MpfaPattern, width: usize, height: usize, angle: Angle) -> SampleMask {
    SampleMask::from_fn(width, height, |x, y| pat.angle_at(x, y) == angle)
}

pub fn color_angle_mask(pat: &CpfaPattern, width: usize, height: usize, color: Color, angle: Angle) -> SampleMask {
    SampleMask::from_fn(width, height, |x, y| {
        pat.color_at(x, y) == color && pat.angle_at(x, y) == angle
    })
}
