//! Ground-truth dataset manifests.
//!
//! A manifest lists, per scene, one image per polarizer orientation and the
//! bit depth of the stored codes. Images are grayscale (four-plane scenes)
//! or RGB (twelve-plane scenes). JSON form:
//!
//! ```json
//! { "scenes": [ { "id": "scene01", "bit_depth": 10,
//!                 "files": { "0": "s01_0.png", "45": "s01_45.png",
//!                            "90": "s01_90.png", "135": "s01_135.png" } } ] }
//! ```
//!
//! CSV form has the header `id,bit_depth,i0,i45,i90,i135` with an optional
//! trailing `pattern` column holding a JSON 2x2 table. Relative paths are
//! resolved against the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cpfa::ColorPolarizationStack;
use crate::error::{Error, Result};
use crate::image::PlaneImage;
use crate::io::{read_planes, BitDepth};
use crate::mosaic::{Angle, Color, MpfaPattern, PolarizationStack};

#[derive(Clone, Debug, PartialEq)]
pub struct SceneRecord {
    pub id: String,
    /// Image paths indexed like [`Angle::ALL`].
    pub files: [PathBuf; 4],
    pub bit_depth: BitDepth,
    pub width: usize,
    pub height: usize,
    /// RGB images, giving twelve planes.
    pub color: bool,
    /// Mosaic layout for this scene, overriding the experiment default.
    pub pattern: Option<MpfaPattern>,
}

/// Ground truth of one scene.
#[derive(Clone, Debug, PartialEq)]
pub enum GroundTruth {
    Mono(PolarizationStack),
    Color(Box<ColorPolarizationStack>),
}

impl GroundTruth {
    /// Four-plane stack for monochrome experiments: the green channel of
    /// color scenes.
    pub fn mono(&self) -> PolarizationStack {
        match self {
            GroundTruth::Mono(s) => s.clone(),
            GroundTruth::Color(c) => c.channel(Color::G).clone(),
        }
    }

    pub fn color(&self) -> Option<&ColorPolarizationStack> {
        match self {
            GroundTruth::Color(c) => Some(c),
            GroundTruth::Mono(_) => None,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            GroundTruth::Mono(s) => s.dims(),
            GroundTruth::Color(c) => c.dims(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonManifest {
    Wrapped { scenes: Vec<JsonScene> },
    Bare(Vec<JsonScene>),
}

#[derive(Deserialize)]
struct JsonScene {
    id: String,
    bit_depth: BitDepth,
    files: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pattern: Option<MpfaPattern>,
}

#[derive(Deserialize)]
struct CsvScene {
    id: String,
    bit_depth: u8,
    i0: Option<PathBuf>,
    i45: Option<PathBuf>,
    i90: Option<PathBuf>,
    i135: Option<PathBuf>,
    #[serde(default)]
    pattern: Option<String>,
}

struct RawScene {
    id: String,
    bit_depth: BitDepth,
    files: [Option<PathBuf>; 4],
    pattern: Option<MpfaPattern>,
}

fn parse_json(text: &str) -> Result<Vec<RawScene>> {
    let scenes = match serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))? {
        JsonManifest::Wrapped { scenes } | JsonManifest::Bare(scenes) => scenes,
    };
    scenes
        .into_iter()
        .map(|s| {
            let mut files: [Option<PathBuf>; 4] = Default::default();
            for (key, path) in s.files {
                let deg = key
                    .trim_end_matches('°')
                    .parse::<u16>()
                    .map_err(|_| Error::Dataset {
                        scene: s.id.clone(),
                        reason: format!("file key {key:?} is not an angle"),
                    })
                    .and_then(Angle::from_degrees)?;
                files[deg.index()] = Some(path);
            }
            Ok(RawScene {
                id: s.id,
                bit_depth: s.bit_depth,
                files,
                pattern: s.pattern,
            })
        })
        .collect()
}

fn parse_csv(text: &str) -> Result<Vec<RawScene>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rdr.deserialize::<CsvScene>() {
        let row = row?;
        let nonempty = |p: Option<PathBuf>| p.filter(|p| !p.as_os_str().is_empty());
        let pattern = match row.pattern.filter(|p| !p.is_empty()) {
            Some(p) => Some(p.parse()?),
            None => None,
        };
        out.push(RawScene {
            bit_depth: BitDepth::new(row.bit_depth)?,
            files: [row.i0, row.i45, row.i90, row.i135].map(nonempty),
            pattern,
            id: row.id,
        });
    }
    Ok(out)
}

fn read_scene_planes(id: &str, path: &Path, depth: BitDepth) -> Result<Vec<PlaneImage>> {
    read_planes(path, depth).map_err(|e| match e {
        Error::Io { path, source } => Error::SceneIo {
            scene: id.to_string(),
            path,
            source,
        },
        other => Error::Dataset {
            scene: id.to_string(),
            reason: other.to_string(),
        },
    })
}

fn load_planes(record_id: &str, files: &[PathBuf; 4], depth: BitDepth) -> Result<[Vec<PlaneImage>; 4]> {
    let mut out: Vec<Vec<PlaneImage>> = Vec::with_capacity(4);
    for (a, path) in Angle::ALL.into_iter().zip(files) {
        let planes = read_scene_planes(record_id, path, depth)?;
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::Dataset {
                scene: record_id.to_string(),
                reason: format!("{a}° image has {} channels", planes.len()),
            });
        }
        if let Some(first) = out.first() {
            if planes.len() != first.len() || planes[0].dims() != first[0].dims() {
                return Err(Error::Dataset {
                    scene: record_id.to_string(),
                    reason: format!(
                        "{a}° image is {}x{} with {} channels, 0° image is {}x{} with {}",
                        planes[0].width(),
                        planes[0].height(),
                        planes.len(),
                        first[0].width(),
                        first[0].height(),
                        first.len()
                    ),
                });
            }
        }
        out.push(planes);
    }
    Ok(out.try_into().expect("four angles"))
}

/// Reads and validates a JSON (`.json`) or CSV manifest. Every referenced
/// image is decoded once to check that the scene is complete and
/// consistently sized.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Vec<SceneRecord>> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let is_json = manifest_path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with(['{', '[']);
    let raw = if is_json { parse_json(&text)? } else { parse_csv(&text)? };
    let base = manifest_path.parent().unwrap_or(Path::new(""));

    let mut records = Vec::with_capacity(raw.len());
    for scene in raw {
        if records.iter().any(|r: &SceneRecord| r.id == scene.id) {
            return Err(Error::Dataset {
                scene: scene.id,
                reason: "duplicate scene id".into(),
            });
        }
        let mut files: Vec<PathBuf> = Vec::with_capacity(4);
        for (a, f) in Angle::ALL.into_iter().zip(scene.files) {
            let f = f.ok_or_else(|| Error::Dataset {
                scene: scene.id.clone(),
                reason: format!("no image for angle {a}°"),
            })?;
            files.push(base.join(f));
        }
        let files: [PathBuf; 4] = files.try_into().expect("four angles");
        let planes = load_planes(&scene.id, &files, scene.bit_depth)?;
        let (width, height) = planes[0][0].dims();
        records.push(SceneRecord {
            color: planes[0].len() == 3,
            id: scene.id,
            files,
            bit_depth: scene.bit_depth,
            width,
            height,
            pattern: scene.pattern,
        });
    }
    Ok(records)
}

impl SceneRecord {
    pub fn load(&self) -> Result<GroundTruth> {
        let planes = load_planes(&self.id, &self.files, self.bit_depth)?;
        if planes[0][0].dims() != (self.width, self.height) {
            return Err(Error::Dataset {
                scene: self.id.clone(),
                reason: "images changed size since the manifest was loaded".into(),
            });
        }
        if self.color {
            let mut per_angle = planes.map(|p| p.into_iter());
            let mut by_color: Vec<PolarizationStack> = Vec::with_capacity(3);
            for _ in Color::ALL {
                let four = per_angle.each_mut().map(|it| it.next().expect("three channels"));
                by_color.push(PolarizationStack::from_planes(four)?);
            }
            Ok(GroundTruth::Color(Box::new(ColorPolarizationStack::new(
                by_color.try_into().expect("three colors"),
            )?)))
        } else {
            Ok(GroundTruth::Mono(PolarizationStack::from_planes(
                planes.map(|mut p| p.remove(0)),
            )?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{write_image, write_rgb};

    fn write_gray_scene(dir: &Path, id: &str, w: usize, h: usize) {
        for a in Angle::ALL {
            let img = PlaneImage::from_fn(w, h, |x, y| ((x + y + a.index()) % 7) as f64 / 7.0).unwrap();
            write_image(&img, dir.join(format!("{id}_{a}.png")), BitDepth::TEN).unwrap();
        }
    }

    fn json_entry(id: &str, skip: Option<Angle>) -> String {
        let files: Vec<String> = Angle::ALL
            .into_iter()
            .filter(|a| Some(*a) != skip)
            .map(|a| format!("\"{}\": \"{id}_{a}.png\"", a.degrees()))
            .collect();
        format!(
            "{{\"id\": \"{id}\", \"bit_depth\": 10, \"files\": {{{}}}}}",
            files.join(", ")
        )
    }

    #[test]
    fn two_scene_json_manifest() {
        let dir = tempfile::tempdir().unwrap();
        write_gray_scene(dir.path(), "a", 8, 6);
        write_gray_scene(dir.path(), "b", 8, 6);
        let m = dir.path().join("m.json");
        fs::write(
            &m,
            format!("{{\"scenes\": [{}, {}]}}", json_entry("a", None), json_entry("b", None)),
        )
        .unwrap();
        let recs = load_dataset(&m).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].id.as_str(), recs[1].id.as_str()), ("a", "b"));
        assert_eq!(
            (recs[0].width, recs[0].height, recs[0].bit_depth),
            (8, 6, BitDepth::TEN)
        );
        assert!(!recs[0].color);
        let gt = recs[1].load().unwrap();
        assert_eq!(gt.dims(), (8, 6));
        assert!((gt.mono().plane(Angle::A45).get(0, 0) - 1.0 / 7.0).abs() < 1e-3);
    }

    #[test]
    fn csv_manifest_with_color_scene() {
        let dir = tempfile::tempdir().unwrap();
        for a in Angle::ALL {
            let p = [0.2, 0.5, 0.8].map(|v| PlaneImage::filled(4, 4, v).unwrap());
            write_rgb(
                [&p[0], &p[1], &p[2]],
                dir.path().join(format!("c_{a}.png")),
                BitDepth::TEN,
            )
            .unwrap();
        }
        let m = dir.path().join("m.csv");
        fs::write(
            &m,
            "# scenes\nid,bit_depth,i0,i45,i90,i135,pattern\nc,10,c_0.png,c_45.png,c_90.png,c_135.png,\"[[0,45],[135,90]]\"\n",
        )
        .unwrap();
        let recs = load_dataset(&m).unwrap();
        assert!(recs[0].color);
        assert_eq!(recs[0].pattern.unwrap().to_string(), "[[0,45],[135,90]]");
        let gt = recs[0].load().unwrap();
        let rgb = gt.color().unwrap();
        assert!((rgb.plane(Color::B, Angle::A90).get(1, 1) - 0.8).abs() < 1e-3);
        // Green channel feeds monochrome experiments.
        assert!((gt.mono().plane(Angle::A0).get(3, 3) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn ten_bit_1024x768_scene() {
        let dir = tempfile::tempdir().unwrap();
        write_gray_scene(dir.path(), "big", 1024, 768);
        let m = dir.path().join("m.json");
        fs::write(&m, format!("[{}]", json_entry("big", None))).unwrap();
        let r = &load_dataset(&m).unwrap()[0];
        assert_eq!((r.width, r.height, r.bit_depth.bits()), (1024, 768, 10));
    }

    #[test]
    fn missing_angle_names_the_angle() {
        let dir = tempfile::tempdir().unwrap();
        write_gray_scene(dir.path(), "a", 4, 4);
        let m = dir.path().join("m.json");
        fs::write(&m, format!("[{}]", json_entry("a", Some(Angle::A135)))).unwrap();
        match load_dataset(&m) {
            Err(e @ Error::Dataset { .. }) => assert!(e.to_string().contains("135"), "{e}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_names_the_scene() {
        let dir = tempfile::tempdir().unwrap();
        write_gray_scene(dir.path(), "a", 4, 4);
        fs::remove_file(dir.path().join("a_90.png")).unwrap();
        let m = dir.path().join("m.json");
        fs::write(&m, format!("[{}]", json_entry("a", None))).unwrap();
        match load_dataset(&m) {
            Err(Error::SceneIo { scene, path, .. }) => {
                assert_eq!(scene, "a");
                assert!(path.ends_with("a_90.png"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_gray_scene(dir.path(), "a", 4, 4);
        write_image(
            &PlaneImage::new(5, 4).unwrap(),
            dir.path().join("a_45.png"),
            BitDepth::TEN,
        )
        .unwrap();
        let m = dir.path().join("m.json");
        fs::write(&m, format!("[{}]", json_entry("a", None))).unwrap();
        match load_dataset(&m) {
            Err(e @ Error::Dataset { .. }) => assert!(e.to_string().contains("45°"), "{e}"),
            other => panic!("{other:?}"),
        }
    }
}
