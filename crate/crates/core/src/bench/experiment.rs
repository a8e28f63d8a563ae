//! Experiment orchestration and CSV reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{load_dataset, GroundTruth};
use super::synth::{synth_color_scene, synth_scene, SceneKind, SynthParams};
use crate::cpfa::ColorPolarizationStack;
use crate::error::{Error, Result};
use crate::image::PlaneImage;
use crate::io::{write_image, write_rgb, BitDepth};
use crate::methods::{demosaick_cpfa_method, demosaick_mpfa, CpfaMethod, MethodParams, MpfaMethod};
use crate::mosaic::{mosaic_cpfa, mosaic_mpfa, Angle, Color, CpfaPattern, MpfaPattern, PolarizationStack};
use crate::polar::{cpfa_metrics, mpfa_metrics, stokes_from_stack, MetricsRow, StokesMaps};
use crate::viz::{legend, render_aop_dop, VizMode};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensor {
    #[default]
    Mpfa,
    Cpfa,
}

impl std::fmt::Display for Sensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sensor::Mpfa => "mpfa",
            Sensor::Cpfa => "cpfa",
        })
    }
}

/// One synthetic scene of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSceneSpec {
    #[serde(default)]
    pub id: Option<String>,
    pub kind: SceneKind,
    #[serde(default)]
    pub params: SynthParams,
    /// Defaults to the experiment seed plus the scene's index.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub name: String,
    pub sensor: Sensor,
    /// MPFA method names for `mpfa`, CPFA method names for `cpfa`.
    pub methods: Vec<String>,
    pub pattern: MpfaPattern,
    pub cpfa_pattern: CpfaPattern,
    pub params: MethodParams,
    /// Metric columns to report; empty means all.
    pub metrics: Vec<String>,
    /// Dataset manifest; its scenes come before the synthetic ones.
    pub dataset: Option<PathBuf>,
    pub scenes: Vec<SynthSceneSpec>,
    pub seed: u64,
    /// No files are written when unset.
    pub output_dir: Option<PathBuf>,
    pub save_images: bool,
    pub save_viz: bool,
    pub viz_mode: VizMode,
    pub image_depth: BitDepth,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            sensor: Sensor::Mpfa,
            methods: Vec::new(),
            pattern: MpfaPattern::default(),
            cpfa_pattern: CpfaPattern::default(),
            params: MethodParams::default(),
            metrics: Vec::new(),
            dataset: None,
            scenes: Vec::new(),
            seed: 0,
            output_dir: None,
            save_images: false,
            save_viz: false,
            viz_mode: VizMode::Flat,
            image_depth: BitDepth::SIXTEEN,
            workers: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Mpfa(MpfaMethod),
    Cpfa(CpfaMethod),
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Mpfa(m) => m.fmt(f),
            Method::Cpfa(m) => m.fmt(f),
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON or TOML config, chosen by extension.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut cfg: Self = if toml {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        if let (Some(d), Some(dir)) = (&cfg.dataset, path.parent()) {
            if d.is_relative() {
                cfg.dataset = Some(dir.join(d));
            }
        }
        Ok(cfg)
    }

    pub fn resolved_methods(&self) -> Result<Vec<Method>> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        self.methods
            .iter()
            .map(|m| match self.sensor {
                Sensor::Mpfa => m.parse().map(Method::Mpfa),
                Sensor::Cpfa => m.parse().map(Method::Cpfa),
            })
            .collect()
    }

    /// Column indices into [`MetricsRow::COLUMNS`].
    pub fn resolved_columns(&self) -> Result<Vec<usize>> {
        if self.metrics.is_empty() {
            return Ok((0..MetricsRow::COLUMNS.len()).collect());
        }
        self.metrics
            .iter()
            .map(|m| {
                MetricsRow::COLUMNS
                    .iter()
                    .position(|c| c.eq_ignore_ascii_case(m))
                    .ok_or_else(|| Error::Config(format!("unknown metric {m:?}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_methods()?;
        self.resolved_columns()?;
        self.params.eari.validate()?;
        self.params.guided_filter.validate()?;
        if self.dataset.is_none() && self.scenes.is_empty() {
            return Err(Error::Config("at least one scene is required".into()));
        }
        Ok(())
    }
}

enum SceneSource {
    Dataset(super::dataset::SceneRecord),
    Synthetic { spec: SynthSceneSpec, seed: u64 },
}

struct Scene {
    id: String,
    seed: Option<u64>,
    source: SceneSource,
}

impl Scene {
    fn pattern(&self, default: MpfaPattern) -> MpfaPattern {
        match &self.source {
            SceneSource::Dataset(r) => r.pattern.unwrap_or(default),
            SceneSource::Synthetic { .. } => default,
        }
    }

    fn ground_truth(&self, sensor: Sensor) -> Result<GroundTruth> {
        match (&self.source, sensor) {
            (SceneSource::Dataset(r), _) => r.load(),
            (SceneSource::Synthetic { spec, seed }, Sensor::Mpfa) => {
                synth_scene(spec.kind, &spec.params, *seed).map(GroundTruth::Mono)
            }
            (SceneSource::Synthetic { spec, seed }, Sensor::Cpfa) => {
                synth_color_scene(spec.kind, &spec.params, *seed).map(|c| GroundTruth::Color(Box::new(c)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneResult {
    pub id: String,
    pub seed: Option<u64>,
    /// One row per method, in config order.
    pub rows: Vec<(String, MetricsRow)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub name: String,
    pub sensor: Sensor,
    pub pattern: String,
    pub seed: u64,
    pub params: MethodParams,
    pub columns: Vec<usize>,
    pub scenes: Vec<SceneResult>,
    pub failures: Vec<SceneFailure>,
    /// Per-method means over the successful scenes.
    pub averages: Vec<(String, MetricsRow)>,
}

fn format_value(v: f64) -> String {
    // `Display` gives the shortest round-trip form and writes +∞ as "inf".
    format!("{v}")
}

impl MetricsReport {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn average(&self, method: &str) -> Option<&MetricsRow> {
        self.averages.iter().find(|(m, _)| m == method).map(|(_, r)| r)
    }

    fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# experiment: {}", self.name);
        let _ = writeln!(h, "# sensor: {}", self.sensor);
        let _ = writeln!(h, "# pattern: {}", self.pattern);
        let _ = writeln!(
            h,
            "# params: {}",
            serde_json::to_string(&self.params).expect("params serialize")
        );
        let _ = writeln!(
            h,
            "# psnr peaks: I0..I135=1 S0=2 S1=1 S2=1 DoP=1 (DoP clamped to [0,1]); AoP is angle RMSE in degrees; inf = exact"
        );
        if self.sensor == Sensor::Cpfa {
            let _ = writeln!(
                h,
                "# color: PSNR columns are CPSNR over R,G,B; AoP is the mean of per-color RMSEs"
            );
        }
        let _ = writeln!(h, "# seed: {}", self.seed);
        let seeds: Vec<String> = self
            .scenes
            .iter()
            .filter_map(|s| s.seed.map(|seed| format!("{}={seed}", s.id)))
            .collect();
        if !seeds.is_empty() {
            let _ = writeln!(h, "# scene seeds: {}", seeds.join(" "));
        }
        for f in &self.failures {
            let _ = writeln!(h, "# failed: {}: {}", f.id, f.reason.replace('\n', " "));
        }
        h
    }

    fn csv_body(&self, lead: &[&str], rows: impl Iterator<Item = (Vec<String>, MetricsRow)>) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head: Vec<&str> = lead.to_vec();
        head.extend(self.columns.iter().map(|&c| MetricsRow::COLUMNS[c]));
        w.write_record(&head)?;
        for (mut rec, row) in rows {
            let v = row.values();
            rec.extend(self.columns.iter().map(|&c| format_value(v[c])));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn per_scene_csv(&self) -> Result<String> {
        let rows = self
            .scenes
            .iter()
            .flat_map(|s| s.rows.iter().map(move |(m, r)| (vec![s.id.clone(), m.clone()], *r)));
        Ok(self.header() + &self.csv_body(&["scene", "method"], rows)?)
    }

    pub fn average_csv(&self) -> Result<String> {
        let mut h = self.header();
        let _ = writeln!(h, "# averaged over {} scenes", self.scenes.len());
        let rows = self.averages.iter().map(|(m, r)| (vec![m.clone()], *r));
        Ok(h + &self.csv_body(&["method"], rows)?)
    }

    /// Writes `per_scene.csv` and `average.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in [
            ("per_scene.csv", self.per_scene_csv()?),
            ("average.csv", self.average_csv()?),
        ] {
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// Directory-safe form of a scene id.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn mean_stokes(c: &ColorPolarizationStack) -> Result<StokesMaps> {
    let s = Color::ALL.map(|col| stokes_from_stack(c.channel(col)));
    let avg = |f: fn(&StokesMaps) -> &PlaneImage| -> Result<PlaneImage> {
        f(&s[0])
            .zip_map(f(&s[1]), |a, b| a + b)?
            .zip_map(f(&s[2]), |a, b| (a + b) / 3.0)
    };
    StokesMaps::new(avg(|m| &m.s0)?, avg(|m| &m.s1)?, avg(|m| &m.s2)?)
}

#[derive(Clone, Copy)]
enum Output<'a> {
    Mono(&'a PolarizationStack),
    Color(&'a ColorPolarizationStack),
}

impl Output<'_> {
    fn stokes(&self) -> Result<StokesMaps> {
        match self {
            Output::Mono(s) => Ok(stokes_from_stack(s)),
            Output::Color(c) => mean_stokes(c),
        }
    }
}

struct Artifacts<'a> {
    cfg: &'a ExperimentConfig,
    root: &'a Path,
    scene: String,
}

impl Artifacts<'_> {
    fn images(&self, label: &str, out: Output<'_>) -> Result<()> {
        let dir = self.root.join("images").join(&self.scene);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let depth = self.cfg.image_depth;
        match out {
            Output::Mono(s) => {
                for a in Angle::ALL {
                    write_image(s.plane(a), dir.join(format!("{label}_I{a}.png")), depth)?;
                }
            }
            Output::Color(c) => {
                for a in Angle::ALL {
                    let p = Color::ALL.map(|col| c.plane(col, a));
                    write_rgb(p, dir.join(format!("{label}_I{a}.png")), depth)?;
                }
            }
        }
        Ok(())
    }

    fn viz(&self, label: &str, out: Output<'_>) -> Result<()> {
        let dir = self.root.join("viz").join(&self.scene);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let rgb = render_aop_dop(&out.stokes()?, self.cfg.viz_mode);
        write_rgb(
            [&rgb[0], &rgb[1], &rgb[2]],
            dir.join(format!("{label}_aop_dop.png")),
            BitDepth::EIGHT,
        )
    }

    fn save(&self, label: &str, out: Output<'_>) -> Result<()> {
        if self.cfg.save_images {
            self.images(label, out)?;
        }
        if self.cfg.save_viz {
            self.viz(label, out)?;
        }
        Ok(())
    }
}

fn process_scene(cfg: &ExperimentConfig, methods: &[Method], scene: &Scene) -> Result<Vec<(String, MetricsRow)>> {
    let start = Instant::now();
    let truth = scene.ground_truth(cfg.sensor)?;
    let artifacts = cfg.output_dir.as_deref().map(|root| Artifacts {
        cfg,
        root,
        scene: file_stem(&scene.id),
    });
    let mut rows = Vec::with_capacity(methods.len());
    match cfg.sensor {
        Sensor::Mpfa => {
            let gt = truth.mono();
            let pat = scene.pattern(cfg.pattern);
            let raw = mosaic_mpfa(&gt, &pat);
            if let Some(a) = &artifacts {
                a.save("ground_truth", Output::Mono(&gt))?;
            }
            for m in methods {
                let Method::Mpfa(mm) = m else {
                    unreachable!("resolved for mpfa")
                };
                let out = demosaick_mpfa(&raw, &pat, *mm, &cfg.params)?;
                rows.push((m.to_string(), mpfa_metrics(&gt, &out)?));
                if let Some(a) = &artifacts {
                    a.save(&m.to_string(), Output::Mono(&out))?;
                }
            }
        }
        Sensor::Cpfa => {
            let gt = match truth {
                GroundTruth::Color(c) => c,
                GroundTruth::Mono(_) => {
                    return Err(Error::Dataset {
                        scene: scene.id.clone(),
                        reason: "CPFA experiments need RGB ground truth".into(),
                    })
                }
            };
            let raw = mosaic_cpfa(&gt, &cfg.cpfa_pattern);
            if let Some(a) = &artifacts {
                a.save("ground_truth", Output::Color(&gt))?;
            }
            for m in methods {
                let Method::Cpfa(cm) = m else {
                    unreachable!("resolved for cpfa")
                };
                let out = demosaick_cpfa_method(&raw, &cfg.cpfa_pattern, *cm, &cfg.params)?;
                rows.push((m.to_string(), cpfa_metrics(&gt, &out)?));
                if let Some(a) = &artifacts {
                    a.save(&m.to_string(), Output::Color(&out))?;
                }
            }
        }
    }
    log::info!("scene {} done in {:.2?}", scene.id, start.elapsed());
    Ok(rows)
}

fn collect_scenes(cfg: &ExperimentConfig) -> Result<Vec<Scene>> {
    let mut scenes = Vec::new();
    if let Some(manifest) = &cfg.dataset {
        for r in load_dataset(manifest)? {
            scenes.push(Scene {
                id: r.id.clone(),
                seed: None,
                source: SceneSource::Dataset(r),
            });
        }
    }
    for (i, spec) in cfg.scenes.iter().enumerate() {
        let seed = spec.seed.unwrap_or(cfg.seed.wrapping_add(i as u64));
        scenes.push(Scene {
            id: spec.id.clone().unwrap_or_else(|| format!("{}{i:02}", spec.kind)),
            seed: Some(seed),
            source: SceneSource::Synthetic {
                spec: spec.clone(),
                seed,
            },
        });
    }
    let mut ids: Vec<&str> = scenes.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("duplicate scene id {:?}", w[0])));
    }
    Ok(scenes)
}

/// Runs every method on every scene. Scene failures are recorded in the
/// report rather than aborting the run; configuration errors abort it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let methods = cfg.resolved_methods()?;
    let scenes = collect_scenes(cfg)?;
    log::info!(
        "experiment {}: {} scenes, methods [{}]",
        cfg.name,
        scenes.len(),
        cfg.methods.join(", ")
    );

    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<Vec<(String, MetricsRow)>>> =
        pool.install(|| scenes.par_iter().map(|s| process_scene(cfg, &methods, s)).collect());

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (scene, outcome) in scenes.iter().zip(outcomes) {
        match outcome {
            Ok(rows) => results.push(SceneResult {
                id: scene.id.clone(),
                seed: scene.seed,
                rows,
            }),
            Err(e) => {
                log::error!("scene {} failed: {e}", scene.id);
                failures.push(SceneFailure {
                    id: scene.id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }

    let averages = methods
        .iter()
        .enumerate()
        .filter_map(|(k, m)| {
            let rows: Vec<MetricsRow> = results.iter().map(|s| s.rows[k].1).collect();
            MetricsRow::mean(&rows).map(|r| (m.to_string(), r))
        })
        .collect();

    let report = MetricsReport {
        name: cfg.name.clone(),
        sensor: cfg.sensor,
        pattern: match cfg.sensor {
            Sensor::Mpfa => cfg.pattern.to_string(),
            Sensor::Cpfa => serde_json::to_string(&cfg.cpfa_pattern).expect("pattern serializes"),
        },
        seed: cfg.seed,
        params: cfg.params,
        columns: cfg.resolved_columns()?,
        scenes: results,
        failures,
        averages,
    };

    if let Some(dir) = &cfg.output_dir {
        report.write_csvs(dir)?;
        if cfg.save_viz {
            let l = legend(256, 64)?;
            let dir = dir.join("viz");
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_rgb([&l[0], &l[1], &l[2]], dir.join("legend.png"), BitDepth::EIGHT)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(kind: SceneKind, w: usize, h: usize) -> SynthSceneSpec {
        SynthSceneSpec {
            id: None,
            kind,
            params: SynthParams {
                width: w,
                height: h,
                ..SynthParams::default()
            },
            seed: None,
        }
    }

    #[test]
    fn constant_scene_gives_inf_row() {
        let cfg = ExperimentConfig {
            methods: vec!["bilinear".into()],
            scenes: vec![synth(SceneKind::Constant, 16, 16)],
            ..ExperimentConfig::default()
        };
        let rep = run_experiment(&cfg).unwrap();
        let row = rep.average("bilinear").unwrap();
        assert!(row.values()[..8].iter().all(|v| *v == f64::INFINITY));
        assert_eq!(row.aop, 0.0);
        let csv = rep.per_scene_csv().unwrap();
        assert!(
            csv.contains("constant00,bilinear,inf,inf,inf,inf,inf,inf,inf,inf,0\n"),
            "{csv}"
        );
    }

    #[test]
    fn averages_are_means_of_scene_rows() {
        let cfg = ExperimentConfig {
            methods: vec!["bilinear".into(), "eari".into()],
            scenes: vec![
                synth(SceneKind::Disk, 24, 20),
                synth(SceneKind::Sinusoid, 24, 20),
                synth(SceneKind::Step, 24, 20),
            ],
            workers: 2,
            ..ExperimentConfig::default()
        };
        let rep = run_experiment(&cfg).unwrap();
        for (k, (m, avg)) in rep.averages.iter().enumerate() {
            for c in 0..9 {
                let mean = rep.scenes.iter().map(|s| s.rows[k].1.values()[c]).sum::<f64>() / 3.0;
                let got = avg.values()[c];
                assert!(got == mean || (got - mean).abs() <= 1e-12, "{m} {c}: {got} vs {mean}");
            }
        }
    }

    #[test]
    fn metric_selection_and_validation() {
        let mut cfg = ExperimentConfig {
            methods: vec!["bicubic".into()],
            metrics: vec!["I0".into(), "aop".into()],
            scenes: vec![synth(SceneKind::Ramp, 12, 12)],
            ..ExperimentConfig::default()
        };
        let csv = run_experiment(&cfg).unwrap().average_csv().unwrap();
        assert!(csv.lines().any(|l| l == "method,I0,AoP"), "{csv}");
        cfg.methods = vec!["bilinear12".into()];
        assert!(matches!(run_experiment(&cfg), Err(Error::InvalidParams(_))));
        cfg.methods.clear();
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        cfg.methods = vec!["bicubic".into()];
        cfg.scenes.clear();
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn failed_scene_is_reported_not_fatal() {
        let cfg = ExperimentConfig {
            sensor: Sensor::Cpfa,
            methods: vec!["eari".into()],
            scenes: vec![synth(SceneKind::Constant, 8, 8), synth(SceneKind::Disk, 9, 8)],
            ..ExperimentConfig::default()
        };
        let rep = run_experiment(&cfg).unwrap();
        assert!(!rep.all_succeeded());
        assert_eq!(rep.scenes.len(), 1);
        assert_eq!(rep.failures[0].id, "disk01");
        assert!(rep.average_csv().unwrap().contains("# failed: disk01"));
    }

    #[test]
    fn toml_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(
            &p,
            r#"
name = "t"
methods = ["bilinear", "eari"]
pattern = [[0, 45], [135, 90]]
seed = 7

[params.guided_filter]
radius = 3

[[scenes]]
kind = "disk"
params = { width = 16, height = 16, radius = 5.0 }
"#,
        )
        .unwrap();
        let cfg = ExperimentConfig::from_file(&p).unwrap();
        assert_eq!(cfg.params.guided_filter.radius, 3);
        assert_eq!(cfg.params.guided_filter.eps, 1e-4);
        assert_eq!(cfg.pattern.to_string(), "[[0,45],[135,90]]");
        assert_eq!(cfg.scenes[0].params.radius, 5.0);
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.scenes[0].seed, Some(7));
    }
}
