//! Demosaicking for polarization filter array sensors.
//!
//! Monochrome (2x2 polarizer mosaic) and color (quad-Bayer) sensors are
//! supported. The main method is edge-aware residual interpolation: a guide
//! image built from direction-weighted intensity estimates steers a guided
//! filter that interpolates each polarization channel. Bilinear, bicubic and
//! per-lattice baselines, Stokes and AoP/DoP computation, false-color
//! rendering and a benchmark harness are included.

pub mod baselines;
pub mod bench;
pub mod cpfa;
pub mod eari;
pub mod error;
pub mod image;
pub mod io;
pub mod lattice;
pub mod methods;
pub mod mosaic;
pub mod polar;
pub mod ri;
pub mod viz;

pub use baselines::{
    demosaick_bayer, demosaick_cpfa_bilinear12, demosaick_mpfa_bicubic, demosaick_mpfa_bilinear, BayerMethod,
};
pub use cpfa::{demosaick_cpfa, ColorPolarizationStack};
pub use eari::{guide_image, Direction, EariParams, Smoothing};
pub use error::{Error, Result};
pub use image::{convolve, BorderMode, Kernel2D, PlaneImage};
pub use io::BitDepth;
pub use methods::{demosaick_cpfa_method, demosaick_mpfa, CpfaMethod, MethodParams, MpfaMethod};
pub use mosaic::{
    mosaic_cpfa, mosaic_mpfa, Angle, BayerPattern, Color, CpfaPattern, MpfaPattern, PolarizationStack, SampleMask,
};
pub use polar::{aop, dop, stokes_from_stack, MetricsRow, StokesMaps};
pub use ri::{demosaick_mpfa_eari, guided_filter, residual_interpolate, GuidedFilterParams};
pub use viz::{render_aop_dop, VizMode};
