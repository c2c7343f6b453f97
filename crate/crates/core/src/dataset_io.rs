//! On-disk formats shared with the training side.
//!
//! Per view directory:
//!
//! | file               | format                                              |
//! |--------------------|-----------------------------------------------------|
//! | `rgb.png`          | 8-bit RGB, `round(255 · c)`                         |
//! | `depth.pfm`        | 1-channel f32 PFM, little-endian (scale `-1.0`)     |
//! | `normals.pfm`      | 3-channel f32 PFM, camera frame                     |
//! | `segmentation.png` | 16-bit gray object ids, 0 = background              |
//! | `labels.png`       | 8-bit gray, `1 → 255`, `0 → 0`, `-1 → 128`          |
//! | `view.json`        | intrinsics, camera pose, target id                  |
//!
//! All rasters are stored top row first, so pixel (0, 0) is the top-left in
//! every file. Floats are persisted as `f32`.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{CameraGridSpec, Intrinsics};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vector3};
use crate::grasp::{
    GraspConfig, GraspLabelMap, GripperModel, LABEL_FAILURE, LABEL_INDETERMINATE, LABEL_SUCCESS,
};
use crate::grid::Grid;
use crate::render::ViewSample;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub const RGB_FILE: &str = "rgb.png";
pub const DEPTH_FILE: &str = "depth.pfm";
pub const NORMALS_FILE: &str = "normals.pfm";
pub const SEGMENTATION_FILE: &str = "segmentation.png";
pub const LABELS_FILE: &str = "labels.png";
pub const VIEW_META_FILE: &str = "view.json";

pub fn label_to_byte(label: i8) -> Result<u8> {
    match label {
        LABEL_SUCCESS => Ok(255),
        LABEL_FAILURE => Ok(0),
        LABEL_INDETERMINATE => Ok(128),
        other => Err(Error::malformed("labels", format!("label value {other}"))),
    }
}

pub fn byte_to_label(b: u8) -> Result<i8> {
    match b {
        255 => Ok(LABEL_SUCCESS),
        0 => Ok(LABEL_FAILURE),
        128 => Ok(LABEL_INDETERMINATE),
        other => Err(Error::InvalidLabelByte(other)),
    }
}

// ---- JSON with 9 significant digits ----

fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig9)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_floats),
        serde_json::Value::Object(m) => m.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and every float rounded to 9 significant digits.
pub fn to_stable_json<S: Serialize>(value: &S) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::malformed("json", e.to_string()))?;
    round_floats(&mut v);
    let mut s =
        serde_json::to_string_pretty(&v).map_err(|e| Error::malformed("json", e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, to_stable_json(value)?).map_err(|e| Error::io(path, e))
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::malformed("json", format!("{}: {e}", path.display())))
}

/// Intrinsics from a JSON file holding either the intrinsics themselves or an
/// object with an `intrinsics` field, such as `view.json`.
pub fn read_intrinsics(path: &Path) -> Result<Intrinsics<f64>> {
    let value: serde_json::Value = read_json(path)?;
    let value = value.get("intrinsics").cloned().unwrap_or(value);
    let intr: Intrinsics<f64> = serde_json::from_value(value)
        .map_err(|e| Error::malformed("json", format!("{}: {e}", path.display())))?;
    intr.validate()?;
    Ok(intr)
}

// ---- PFM ----

/// Float raster with 1 or 3 interleaved channels, top row first.
#[derive(Clone, Debug, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Pfm {
    pub fn encode(&self) -> Vec<u8> {
        let tag = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{tag}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 4);
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |r: &str| Error::malformed("pfm", r.to_string());
        // three whitespace-terminated header tokens groups: tag, "w h", scale
        let mut pos = 0usize;
        let mut token = || -> Result<String> {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos || pos >= bytes.len() {
                return Err(bad("truncated header"));
            }
            std::str::from_utf8(&bytes[start..pos])
                .map(str::to_owned)
                .map_err(|_| bad("non-ascii header"))
        };
        let channels = match token()?.as_str() {
            "Pf" => 1,
            "PF" => 3,
            other => return Err(bad(&format!("unknown tag {other:?}"))),
        };
        let width: usize = token()?.parse().map_err(|_| bad("bad width"))?;
        let height: usize = token()?.parse().map_err(|_| bad("bad height"))?;
        let scale: f32 = token()?.parse().map_err(|_| bad("bad scale"))?;
        if scale == 0.0 || !scale.is_finite() {
            return Err(bad("zero scale"));
        }
        // exactly one whitespace byte ends the header
        let start = pos + 1;
        let n = width
            .checked_mul(height)
            .and_then(|x| x.checked_mul(channels))
            .ok_or_else(|| bad("dimensions overflow"))?;
        let body = bytes.get(start..).unwrap_or(&[]);
        if body.len() != n * 4 {
            return Err(bad(&format!(
                "expected {} data bytes, found {}",
                n * 4,
                body.len()
            )));
        }
        let little = scale < 0.0;
        let data = body
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }
            })
            .collect();
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn write_depth_pfm(path: &Path, depth: &Grid<f64>) -> Result<()> {
    Pfm {
        width: depth.width(),
        height: depth.height(),
        channels: 1,
        data: depth.as_slice().iter().map(|&z| z as f32).collect(),
    }
    .write(path)
}

pub fn read_depth_pfm(path: &Path) -> Result<Grid<f64>> {
    let pfm = Pfm::read(path)?;
    if pfm.channels != 1 {
        return Err(Error::malformed(
            "pfm",
            format!("{}: expected 1 channel", path.display()),
        ));
    }
    Grid::from_vec(
        pfm.width,
        pfm.height,
        pfm.data.into_iter().map(f64::from).collect(),
    )
}

pub fn write_normals_pfm(path: &Path, normals: &Grid<Vector3<f64>>) -> Result<()> {
    Pfm {
        width: normals.width(),
        height: normals.height(),
        channels: 3,
        data: normals
            .as_slice()
            .iter()
            .flat_map(|n| [n.x as f32, n.y as f32, n.z as f32])
            .collect(),
    }
    .write(path)
}

pub fn read_normals_pfm(path: &Path) -> Result<Grid<Vector3<f64>>> {
    let pfm = Pfm::read(path)?;
    if pfm.channels != 3 {
        return Err(Error::malformed(
            "pfm",
            format!("{}: expected 3 channels", path.display()),
        ));
    }
    let data = pfm
        .data
        .chunks_exact(3)
        .map(|c| Vector3::new(f64::from(c[0]), f64::from(c[1]), f64::from(c[2])))
        .collect();
    Grid::from_vec(pfm.width, pfm.height, data)
}

// ---- PNG ----

fn encode_png(
    path: &Path,
    w: usize,
    h: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<()> {
    let to_err =
        |e: png::EncodingError| Error::malformed("png", format!("{}: {e}", path.display()));
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, w as u32, h as u32);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc.write_header().map_err(to_err)?;
        writer.write_image_data(data).map_err(to_err)?;
        writer.finish().map_err(to_err)?;
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct DecodedPng {
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    data: Vec<u8>,
}

fn decode_png(path: &Path) -> Result<DecodedPng> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let to_err =
        |e: png::DecodingError| Error::malformed("png", format!("{}: {e}", path.display()));
    let mut reader = png::Decoder::new(Cursor::new(bytes))
        .read_info()
        .map_err(to_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::malformed("png", "image too large"))?;
    let mut data = vec![0u8; size];
    let info = reader.next_frame(&mut data).map_err(to_err)?;
    data.truncate(info.buffer_size());
    Ok(DecodedPng {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

fn expect_png(
    p: &DecodedPng,
    path: &Path,
    color: png::ColorType,
    depth: png::BitDepth,
) -> Result<()> {
    if p.color != color || p.depth != depth {
        return Err(Error::malformed(
            "png",
            format!(
                "{}: expected {color:?}/{depth:?}, found {:?}/{:?}",
                path.display(),
                p.color,
                p.depth
            ),
        ));
    }
    Ok(())
}

pub fn write_rgb_png(path: &Path, rgb: &Grid<[f64; 3]>) -> Result<()> {
    let data: Vec<u8> = rgb
        .as_slice()
        .iter()
        .flat_map(|c| c.map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8))
        .collect();
    encode_png(
        path,
        rgb.width(),
        rgb.height(),
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        &data,
    )
}

pub fn read_rgb_png(path: &Path) -> Result<Grid<[f64; 3]>> {
    let p = decode_png(path)?;
    expect_png(&p, path, png::ColorType::Rgb, png::BitDepth::Eight)?;
    let data = p
        .data
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]].map(|b| f64::from(b) / 255.0))
        .collect();
    Grid::from_vec(p.width, p.height, data)
}

pub fn write_segmentation_png(path: &Path, seg: &Grid<u16>) -> Result<()> {
    let data: Vec<u8> = seg
        .as_slice()
        .iter()
        .flat_map(|s| s.to_be_bytes())
        .collect();
    encode_png(
        path,
        seg.width(),
        seg.height(),
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &data,
    )
}

pub fn read_segmentation_png(path: &Path) -> Result<Grid<u16>> {
    let p = decode_png(path)?;
    expect_png(&p, path, png::ColorType::Grayscale, png::BitDepth::Sixteen)?;
    let data = p
        .data
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Grid::from_vec(p.width, p.height, data)
}

pub fn write_gray8_png(path: &Path, gray: &Grid<u8>) -> Result<()> {
    encode_png(
        path,
        gray.width(),
        gray.height(),
        png::ColorType::Grayscale,
        png::BitDepth::Eight,
        gray.as_slice(),
    )
}

pub fn read_gray8_png(path: &Path) -> Result<Grid<u8>> {
    let p = decode_png(path)?;
    expect_png(&p, path, png::ColorType::Grayscale, png::BitDepth::Eight)?;
    Grid::from_vec(p.width, p.height, p.data)
}

pub fn write_labels_png(path: &Path, labels: &Grid<i8>) -> Result<()> {
    let bytes = labels
        .as_slice()
        .iter()
        .map(|&l| label_to_byte(l))
        .collect::<Result<Vec<u8>>>()?;
    write_gray8_png(
        path,
        &Grid::from_vec(labels.width(), labels.height(), bytes)?,
    )
}

pub fn read_labels_png(path: &Path) -> Result<Grid<i8>> {
    let g = read_gray8_png(path)?;
    let labels = g
        .as_slice()
        .iter()
        .map(|&b| byte_to_label(b))
        .collect::<Result<Vec<i8>>>()?;
    Grid::from_vec(g.width(), g.height(), labels)
}

/// Binary mask from an 8-bit grayscale PNG: any non-zero byte is inside.
pub fn read_mask_png(path: &Path) -> Result<Grid<bool>> {
    Ok(read_gray8_png(path)?.map(|&b| b != 0))
}

// ---- views ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMeta {
    pub intrinsics: Intrinsics<f64>,
    pub camera_pose: Pose<f64>,
    pub target_id: u32,
}

/// Paths written for one view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewFiles {
    pub rgb: PathBuf,
    pub depth: PathBuf,
    pub segmentation: PathBuf,
    pub normals: PathBuf,
    pub labels: Option<PathBuf>,
    pub meta: PathBuf,
}

impl ViewFiles {
    pub fn in_dir(dir: &Path, with_labels: bool) -> Self {
        Self {
            rgb: dir.join(RGB_FILE),
            depth: dir.join(DEPTH_FILE),
            segmentation: dir.join(SEGMENTATION_FILE),
            normals: dir.join(NORMALS_FILE),
            labels: with_labels.then(|| dir.join(LABELS_FILE)),
            meta: dir.join(VIEW_META_FILE),
        }
    }
}

/// Writes one view (and optionally its labels) into `dir`, creating it.
pub fn write_view(
    view: &ViewSample,
    labels: Option<&GraspLabelMap>,
    target_id: u32,
    dir: &Path,
) -> Result<ViewFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ViewFiles::in_dir(dir, labels.is_some());
    write_rgb_png(&files.rgb, &view.rgb)?;
    write_depth_pfm(&files.depth, &view.depth)?;
    write_normals_pfm(&files.normals, &view.normals)?;
    write_segmentation_png(&files.segmentation, &view.segmentation)?;
    if let (Some(l), Some(path)) = (labels, &files.labels) {
        write_labels_png(path, &l.labels)?;
    }
    write_json(
        &files.meta,
        &ViewMeta {
            intrinsics: view.intrinsics,
            camera_pose: view.camera_pose,
            target_id,
        },
    )?;
    Ok(files)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedView {
    pub view: ViewSample,
    pub labels: Option<GraspLabelMap>,
    pub target_id: u32,
}

/// Reads a view directory written by [`write_view`] and re-validates it.
pub fn read_view(dir: &Path) -> Result<LoadedView> {
    let files = ViewFiles::in_dir(dir, true);
    let meta: ViewMeta = read_json(&files.meta)?;
    let view = ViewSample {
        rgb: read_rgb_png(&files.rgb)?,
        depth: read_depth_pfm(&files.depth)?,
        segmentation: read_segmentation_png(&files.segmentation)?,
        normals: read_normals_pfm(&files.normals)?,
        camera_pose: meta.camera_pose,
        intrinsics: meta.intrinsics,
    };
    view.validate()?;
    let label_path = files.labels.expect("requested");
    let labels = if label_path.exists() {
        let labels = read_labels_png(&label_path)?;
        view.depth.check_shape(&labels)?;
        for (u, v, &l) in labels.iter_pixels() {
            if l != LABEL_INDETERMINATE && u32::from(*view.segmentation.get(u, v)) != meta.target_id
            {
                return Err(Error::ChannelSupport(format!(
                    "pixel ({u}, {v}) labeled off the target"
                )));
            }
        }
        Some(GraspLabelMap::from_labels(labels))
    } else {
        None
    };
    Ok(LoadedView {
        view,
        labels,
        target_id: meta.target_id,
    })
}

// ---- manifest ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub index: usize,
    pub grid_x: usize,
    pub grid_z: usize,
    pub camera_pose: Pose<f64>,
    pub jitter: Vector3<f64>,
    /// Paths relative to the dataset root.
    pub rgb: String,
    pub depth: String,
    pub segmentation: String,
    pub normals: String,
    pub labels: String,
    pub attempted_pixels: usize,
    pub positive_pixels: usize,
    /// Target pixels skipped by the stride and therefore labeled −1.
    pub unsampled_object_pixels: usize,
}

impl ViewRecord {
    /// View directory relative to the dataset root.
    pub fn dir(&self) -> PathBuf {
        Path::new(&self.depth)
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub intrinsics: Intrinsics<f64>,
    pub grid: CameraGridSpec,
    pub look_at_target: Vector3<f64>,
    pub prng: String,
    pub gripper: GripperModel,
    pub grasp: GraspConfig,
    pub stride: usize,
    pub target_id: u32,
    pub rgb_model: String,
    /// Stored normals are exact rendered face normals; this names the
    /// depth-derived estimator used at inference time.
    pub d2nt_variant: String,
    pub depth_normalization_scale: f64,
    pub views: Vec<ViewRecord>,
}

impl DatasetManifest {
    pub fn write(&self, root: &Path) -> Result<()> {
        write_json(&root.join(MANIFEST_FILE), self)
    }

    /// Loads `root/manifest.json` and checks the version and referenced files.
    pub fn read(root: &Path) -> Result<Self> {
        let m: Self = read_json(&root.join(MANIFEST_FILE))?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::malformed(
                "manifest",
                format!(
                    "format_version {} (expected {FORMAT_VERSION})",
                    m.format_version
                ),
            ));
        }
        for v in &m.views {
            for f in [&v.rgb, &v.depth, &v.segmentation, &v.normals, &v.labels] {
                let p = root.join(f);
                if !p.is_file() {
                    return Err(Error::MissingFile(p));
                }
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_byte_mapping() {
        assert_eq!(label_to_byte(-1).unwrap(), 128);
        assert_eq!(label_to_byte(1).unwrap(), 255);
        assert_eq!(label_to_byte(0).unwrap(), 0);
        assert!(label_to_byte(2).is_err());
        assert!(matches!(byte_to_label(7), Err(Error::InvalidLabelByte(7))));
    }

    #[test]
    fn pfm_header_layout() {
        let pfm = Pfm {
            width: 2,
            height: 1,
            channels: 1,
            data: vec![0.123_456_79, -0.0],
        };
        let bytes = pfm.encode();
        assert!(bytes.starts_with(b"Pf\n2 1\n-1.0\n"));
        assert_eq!(&bytes[12..16], &0.123_456_79_f32.to_le_bytes());
        let back = Pfm::decode(&bytes).unwrap();
        assert_eq!(back.data[0].to_bits(), 0.123_456_79_f32.to_bits());
        assert_eq!(back.data[1].to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn truncated_pfm_is_malformed() {
        let bytes = Pfm {
            width: 4,
            height: 4,
            channels: 3,
            data: vec![1.0; 48],
        }
        .encode();
        for cut in [3, 8, bytes.len() - 1] {
            assert!(matches!(
                Pfm::decode(&bytes[..cut]),
                Err(Error::Malformed { format: "pfm", .. })
            ));
        }
        assert!(Pfm::decode(b"P6\n1 1\n255\n\0\0\0").is_err());
    }

    #[test]
    fn big_endian_pfm_accepted() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.5f32.to_be_bytes());
        assert_eq!(Pfm::decode(&bytes).unwrap().data, vec![2.5]);
    }

    #[test]
    fn stable_json_rounds_to_nine_digits() {
        let s =
            to_stable_json(&serde_json::json!({"b": 0.1234567891234, "a": 3, "c": [1.0f64 / 3.0]}))
                .unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": 3,\n  \"b\": 0.123456789,\n  \"c\": [\n    0.333333333\n  ]\n}\n"
        );
    }

    #[test]
    fn label_png_rejects_unknown_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.png");
        write_gray8_png(&path, &Grid::from_vec(2, 1, vec![255, 7]).unwrap()).unwrap();
        assert!(matches!(
            read_labels_png(&path),
            Err(Error::InvalidLabelByte(7))
        ));
        write_labels_png(&path, &Grid::from_vec(3, 1, vec![1, 0, -1]).unwrap()).unwrap();
        assert_eq!(read_gray8_png(&path).unwrap().as_slice(), &[255, 0, 128]);
    }
}
