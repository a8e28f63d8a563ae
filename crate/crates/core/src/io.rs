//! PNG and binary PGM/PPM reading and writing.
//!
//! Integer codes map to `[0, 1]` by the *declared* bit depth, not by the
//! container width: a 10-bit sensor dump stored in 16-bit PNG words is read
//! with depth 10 and divided by 1023.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::PlaneImage;

/// Bit depth of the integer codes inside an image file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BitDepth(u8);

impl BitDepth {
    pub const EIGHT: BitDepth = BitDepth(8);
    pub const TEN: BitDepth = BitDepth(10);
    pub const SIXTEEN: BitDepth = BitDepth(16);

    pub fn new(bits: u8) -> Result<Self> {
        if (1..=16).contains(&bits) {
            Ok(BitDepth(bits))
        } else {
            Err(Error::UnsupportedFormat(format!(
                "bit depth {bits} (supported: 1..=16)"
            )))
        }
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn max_code(self) -> u32 {
        (1u32 << self.0) - 1
    }

    /// `round(clamp(v, 0, 1) * max)`; NaN maps to 0.
    pub fn encode(self, v: f64) -> u16 {
        let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        (v * self.max_code() as f64).round() as u16
    }

    pub fn decode(self, code: u16) -> f64 {
        code as f64 / self.max_code() as f64
    }

    fn container_is_wide(self) -> bool {
        self.0 > 8
    }
}

impl Default for BitDepth {
    fn default() -> Self {
        BitDepth::TEN
    }
}

impl TryFrom<u8> for BitDepth {
    type Error = Error;
    fn try_from(bits: u8) -> Result<Self> {
        BitDepth::new(bits)
    }
}

impl From<BitDepth> for u8 {
    fn from(d: BitDepth) -> u8 {
        d.0
    }
}

/// Reads a single-channel image.
pub fn read_image(path: impl AsRef<Path>, depth: BitDepth) -> Result<PlaneImage> {
    let path = path.as_ref();
    let mut planes = read_planes(path, depth)?;
    if planes.len() != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{}: expected a grayscale image, found {} channels",
            path.display(),
            planes.len()
        )));
    }
    Ok(planes.remove(0))
}

/// Reads a three-channel image as `[R, G, B]` planes.
pub fn read_rgb(path: impl AsRef<Path>, depth: BitDepth) -> Result<[PlaneImage; 3]> {
    let path = path.as_ref();
    let planes = read_planes(path, depth)?;
    let n = planes.len();
    planes
        .try_into()
        .map_err(|_| Error::UnsupportedFormat(format!("{}: expected an RGB image, found {n} channels", path.display())))
}

/// Reads a grayscale or RGB image, returning one plane per channel.
pub fn read_planes(path: impl AsRef<Path>, depth: BitDepth) -> Result<Vec<PlaneImage>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;

    let decoded = if bytes.starts_with(b"\x89PNG") {
        decode_png(path, &bytes)?
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(path, &bytes)?
    } else {
        return Err(Error::UnsupportedFormat(format!(
            "{}: not a PNG or binary PGM/PPM file",
            path.display()
        )));
    };

    let max = depth.max_code();
    if let Some(&bad) = decoded.codes.iter().find(|&&c| c as u32 > max) {
        return Err(Error::UnsupportedFormat(format!(
            "{}: code {bad} exceeds the declared {}-bit range",
            path.display(),
            depth.bits()
        )));
    }

    let (w, h, ch) = (decoded.width, decoded.height, decoded.channels);
    (0..ch)
        .map(|c| {
            let samples = decoded.codes[c..]
                .iter()
                .step_by(ch)
                .map(|&code| depth.decode(code))
                .collect();
            PlaneImage::from_vec(w, h, samples)
        })
        .collect()
}

struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    /// Interleaved codes.
    codes: Vec<u16>,
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<Decoded> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| Error::decode(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::decode(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::decode(path, e.to_string()))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: PNG color type {other:?}",
                path.display()
            )));
        }
    };
    let width = info.width as usize;
    let height = info.height as usize;
    let n = width * height * channels;
    let codes = match info.bit_depth {
        png::BitDepth::Eight => buf[..n].iter().map(|&b| b as u16).collect(),
        png::BitDepth::Sixteen => buf[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: PNG bit depth {other:?}",
                path.display()
            )));
        }
    };
    Ok(Decoded {
        width,
        height,
        channels,
        codes,
    })
}

fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<Decoded> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::decode(path, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::decode(path, "bad header field"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::decode(path, "missing raster separator"));
    }
    pos += 1;

    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::decode(path, "zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedFormat(format!(
            "{}: PNM maxval {maxval}",
            path.display()
        )));
    }
    let n = width * height * channels;
    let raster = &bytes[pos..];
    let codes: Vec<u16> = if maxval < 256 {
        if raster.len() < n {
            return Err(Error::decode(path, "truncated raster"));
        }
        raster[..n].iter().map(|&b| b as u16).collect()
    } else {
        if raster.len() < 2 * n {
            return Err(Error::decode(path, "truncated raster"));
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(&bad) = codes.iter().find(|&&c| c as usize > maxval) {
        return Err(Error::decode(path, format!("code {bad} above maxval {maxval}")));
    }
    Ok(Decoded {
        width,
        height,
        channels,
        codes,
    })
}

/// Writes a grayscale image. The container is chosen by extension
/// (`.png`, `.pgm`, `.pnm`).
pub fn write_image(img: &PlaneImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    write_planes(&[img], path.as_ref(), depth)
}

/// Writes an RGB image (`.png` or `.ppm`).
pub fn write_rgb(planes: [&PlaneImage; 3], path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    write_planes(&planes, path.as_ref(), depth)
}

fn write_planes(planes: &[&PlaneImage], path: &Path, depth: BitDepth) -> Result<()> {
    let (w, h) = planes[0].dims();
    for p in planes {
        crate::image::ensure_same_dims(planes[0], p)?;
    }
    let ch = planes.len();
    let mut codes = Vec::with_capacity(w * h * ch);
    for i in 0..w * h {
        for p in planes {
            codes.push(depth.encode(p.samples()[i]));
        }
    }
    let raster: Vec<u8> = if depth.container_is_wide() {
        codes.iter().flat_map(|c| c.to_be_bytes()).collect()
    } else {
        codes.iter().map(|&c| c as u8).collect()
    };

    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match ext.as_str() {
        "png" => {
            let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
            enc.set_color(if ch == 1 {
                png::ColorType::Grayscale
            } else {
                png::ColorType::Rgb
            });
            enc.set_depth(if depth.container_is_wide() {
                png::BitDepth::Sixteen
            } else {
                png::BitDepth::Eight
            });
            let mut writer = enc.write_header().map_err(|e| png_io(path, e))?;
            writer.write_image_data(&raster).map_err(|e| png_io(path, e))?;
            writer.finish().map_err(|e| png_io(path, e))?;
        }
        "pgm" | "ppm" | "pnm" => {
            let magic = if ch == 1 { "P5" } else { "P6" };
            write!(out, "{magic}\n{w} {h}\n{}\n", depth.max_code())
                .and_then(|_| out.write_all(&raster))
                .map_err(|e| Error::io(path, e))?;
        }
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: unknown output extension (use .png, .pgm or .ppm)",
                path.display()
            )));
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn png_io(path: &Path, e: png::EncodingError) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_rules() {
        assert_eq!(BitDepth::TEN.encode(1.0), 1023);
        assert_eq!(BitDepth::EIGHT.encode(-0.2), 0);
        assert_eq!(BitDepth::SIXTEEN.encode(0.5), 32768);
        assert_eq!(BitDepth::EIGHT.encode(f64::NAN), 0);
        assert_eq!(BitDepth::EIGHT.encode(7.0), 255);
    }

    #[test]
    fn depth_validation() {
        assert!(BitDepth::new(0).is_err());
        assert!(BitDepth::new(17).is_err());
        assert_eq!(BitDepth::new(12).unwrap().max_code(), 4095);
    }

    #[test]
    fn pgm_10bit_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let mut bytes = b"P5\n# comment\n2 2\n1023\n".to_vec();
        for c in [0u16, 1023, 511, 512] {
            bytes.extend_from_slice(&c.to_be_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        let img = read_image(&path, BitDepth::TEN).unwrap();
        assert_eq!(img.samples(), &[0.0, 1.0, 511.0 / 1023.0, 512.0 / 1023.0]);
    }

    #[test]
    fn ppm_rgb_planes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        let mut bytes = b"P6 1 1 1023\n".to_vec();
        for c in [1023u16, 0, 0] {
            bytes.extend_from_slice(&c.to_be_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        let [r, g, b] = read_rgb(&path, BitDepth::TEN).unwrap();
        assert_eq!((r.get(0, 0), g.get(0, 0), b.get(0, 0)), (1.0, 0.0, 0.0));
        assert!(read_image(&path, BitDepth::TEN).is_err());
    }

    #[test]
    fn truncated_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        std::fs::write(&path, b"P5\n4 4\n1023\n\x00\x01").unwrap();
        assert!(matches!(read_image(&path, BitDepth::TEN), Err(Error::Decode { .. })));
        std::fs::write(&path, b"GIF89a").unwrap();
        assert!(matches!(
            read_image(&path, BitDepth::TEN),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            read_image(dir.path().join("missing.png"), BitDepth::TEN),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn codes_above_declared_depth_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = PlaneImage::filled(2, 1, 1.0).unwrap();
        write_image(&img, &path, BitDepth::SIXTEEN).unwrap();
        assert!(matches!(
            read_image(&path, BitDepth::TEN),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn round_trip_codes_all_containers() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [BitDepth::EIGHT, BitDepth::TEN, BitDepth::SIXTEEN] {
            let max = depth.max_code() as f64;
            let img = PlaneImage::from_fn(5, 3, |x, y| ((x * 7 + y * 13) as f64 % max) / max).unwrap();
            for ext in ["png", "pgm"] {
                let path = dir.path().join(format!("rt{}.{ext}", depth.bits()));
                write_image(&img, &path, depth).unwrap();
                let back = read_image(&path, depth).unwrap();
                assert_eq!(back, img, "{ext} at depth {}", depth.bits());
            }
            let rgb = [img.clone(), img.scale(0.5), img.map(|v| 1.0 - v)];
            let path = dir.path().join(format!("rgb{}.png", depth.bits()));
            write_rgb([&rgb[0], &rgb[1], &rgb[2]], &path, depth).unwrap();
            let back = read_rgb(&path, depth).unwrap();
            for (a, b) in back.iter().zip(&rgb) {
                for (&u, &v) in a.samples().iter().zip(b.samples()) {
                    assert_eq!(depth.encode(u), depth.encode(v));
                }
            }
        }
    }

    #[test]
    fn unknown_extension() {
        let dir = tempfile::tempdir().unwrap();
        let img = PlaneImage::filled(1, 1, 0.0).unwrap();
        assert!(write_image(&img, dir.path().join("x.bmp"), BitDepth::EIGHT).is_err());
        assert!(matches!(
            write_image(&img, dir.path().join("no/such/dir/x.png"), BitDepth::EIGHT),
            Err(Error::Io { .. })
        ));
    }
}
