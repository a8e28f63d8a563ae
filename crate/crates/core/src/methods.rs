//! Method selection shared by the CLI and the benchmark harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{demosaick_cpfa_bilinear12, demosaick_mpfa_bicubic, demosaick_mpfa_bilinear, BayerMethod};
use crate::cpfa::{demosaick_cpfa_with, ColorPolarizationStack};
use crate::eari::EariParams;
use crate::error::{Error, Result};
use crate::image::PlaneImage;
use crate::mosaic::{CpfaPattern, MpfaPattern, PolarizationStack};
use crate::ri::{demosaick_mpfa_averaging_ri, demosaick_mpfa_eari, GuidedFilterParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MpfaMethod {
    Bilinear,
    Bicubic,
    Eari,
    /// RI with a non-directional 3x3 averaging guide.
    NonEdgeAware,
}

impl MpfaMethod {
    pub const ALL: [MpfaMethod; 4] = [
        MpfaMethod::Bilinear,
        MpfaMethod::Bicubic,
        MpfaMethod::Eari,
        MpfaMethod::NonEdgeAware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MpfaMethod::Bilinear => "bilinear",
            MpfaMethod::Bicubic => "bicubic",
            MpfaMethod::Eari => "eari",
            MpfaMethod::NonEdgeAware => "non-edge-aware",
        }
    }
}

impl fmt::Display for MpfaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MpfaMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MpfaMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .or(match s {
                "nonedge" | "averaging" => Some(MpfaMethod::NonEdgeAware),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidParams(format!("unknown MPFA method {s:?}")))
    }
}

impl TryFrom<String> for MpfaMethod {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MpfaMethod> for String {
    fn from(m: MpfaMethod) -> String {
        m.name().to_string()
    }
}

/// Parameters shared by every method.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodParams {
    pub eari: EariParams,
    pub guided_filter: GuidedFilterParams,
    pub color_method: BayerMethod,
}

pub fn demosaick_mpfa(
    raw: &PlaneImage,
    pat: &MpfaPattern,
    method: MpfaMethod,
    params: &MethodParams,
) -> Result<PolarizationStack> {
    match method {
        MpfaMethod::Bilinear => demosaick_mpfa_bilinear(raw, pat),
        MpfaMethod::Bicubic => demosaick_mpfa_bicubic(raw, pat),
        MpfaMethod::Eari => demosaick_mpfa_eari(raw, pat, &params.eari, &params.guided_filter),
        MpfaMethod::NonEdgeAware => demosaick_mpfa_averaging_ri(raw, pat, &params.guided_filter),
    }
}

/// CPFA method: either per-lattice bilinear interpolation of all twelve
/// channels, or the color-then-polarization pipeline finished by an MPFA
/// method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CpfaMethod {
    Bilinear12,
    Pipeline(MpfaMethod),
}

impl CpfaMethod {
    pub const ALL: [CpfaMethod; 5] = [
        CpfaMethod::Bilinear12,
        CpfaMethod::Pipeline(MpfaMethod::Bilinear),
        CpfaMethod::Pipeline(MpfaMethod::Bicubic),
        CpfaMethod::Pipeline(MpfaMethod::Eari),
        CpfaMethod::Pipeline(MpfaMethod::NonEdgeAware),
    ];
}

impl fmt::Display for CpfaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CpfaMethod::Bilinear12 => f.write_str("bilinear12"),
            CpfaMethod::Pipeline(m) => write!(f, "pipeline-{m}"),
        }
    }
}

impl FromStr for CpfaMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "bilinear12" {
            return Ok(CpfaMethod::Bilinear12);
        }
        let inner = s.strip_prefix("pipeline-").unwrap_or(s);
        inner
            .parse()
            .map(CpfaMethod::Pipeline)
            .map_err(|_| Error::InvalidParams(format!("unknown CPFA method {s:?}")))
    }
}

impl TryFrom<String> for CpfaMethod {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CpfaMethod> for String {
    fn from(m: CpfaMethod) -> String {
        m.to_string()
    }
}

pub fn demosaick_cpfa_method(
    raw: &PlaneImage,
    pat: &CpfaPattern,
    method: CpfaMethod,
    params: &MethodParams,
) -> Result<ColorPolarizationStack> {
    match method {
        CpfaMethod::Bilinear12 => demosaick_cpfa_bilinear12(raw, pat),
        CpfaMethod::Pipeline(m) => demosaick_cpfa_with(raw, pat, params.color_method, |mosaic, mp| {
            demosaick_mpfa(mosaic, mp, m, params)
        }),
    }
}
