//! Inference pipeline from one RGB-D view to a world-frame grasp command.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::camera::{back_project, PixelCoord};
use crate::d2nt::{depth_to_normals, NormalMap};
use rayon::prelude::*;

use crate::dataset_io::{
    read_depth_pfm, read_mask_png, read_view, DatasetManifest, LoadedView, Pfm,
};
use crate::error::{Error, Result};
use crate::geometry::{Matrix3, UnitQuaternion, Vector3};
use crate::grasp::{jaw_axis, tool_rotation, GraspConfig, GripperModel};
use crate::grid::Grid;
use crate::predict::{
    evaluate, predict_quality, select_grasp_pixel, EvalMetrics, GraspQualityMap, Predictor,
    Selection, DEFAULT_THRESHOLD,
};
use crate::render::ViewSample;

pub const DEFAULT_MAX_TORQUE: f64 = 3.0;
pub const DEFAULT_DEPTH_SCALE: f64 = 2.0;

/// How to obtain the quality map, as written on the command line:
/// `heuristic`, `oracle` or `heatmap:PATH`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictorSpec {
    Heuristic,
    Oracle,
    Heatmap(PathBuf),
}

impl FromStr for PredictorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(Self::Heuristic),
            "oracle" => Ok(Self::Oracle),
            _ => match s.strip_prefix("heatmap:") {
                Some(p) if !p.is_empty() => Ok(Self::Heatmap(PathBuf::from(p))),
                _ => Err(Error::Config(format!(
                    "predictor must be heuristic, oracle or heatmap:PATH, got {s:?}"
                ))),
            },
        }
    }
}

impl PredictorSpec {
    /// Resolves against a loaded view: the oracle needs its labels, the
    /// heatmap is read from disk as a 1-channel PFM.
    pub fn resolve(&self, loaded: &LoadedView) -> Result<Predictor> {
        match self {
            Self::Heuristic => Ok(Predictor::Heuristic),
            Self::Oracle => loaded
                .labels
                .as_ref()
                .map(|l| Predictor::Oracle(l.labels.clone()))
                .ok_or(Error::MissingLabels),
            Self::Heatmap(path) => Ok(Predictor::Heatmap(read_heatmap(path)?)),
        }
    }
}

pub fn read_heatmap(path: &Path) -> Result<Grid<f64>> {
    let pfm = Pfm::read(path)?;
    if pfm.channels != 1 {
        return Err(Error::malformed(
            "heatmap",
            format!("{}: expected 1 channel", path.display()),
        ));
    }
    read_depth_pfm(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Region threshold for the selected grasp, in (0, 1].
    pub threshold: f64,
    /// Depth in meters that maps to 1.0 in the model input.
    pub depth_normalization_scale: f64,
    pub max_torque: f64,
    pub gripper: GripperModel,
    pub grasp: GraspConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            depth_normalization_scale: DEFAULT_DEPTH_SCALE,
            max_torque: DEFAULT_MAX_TORQUE,
            gripper: GripperModel::default(),
            grasp: GraspConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1], got {}",
                self.threshold
            )));
        }
        if !(self.depth_normalization_scale > 0.0 && self.depth_normalization_scale.is_finite()) {
            return Err(Error::Config(
                "depth normalization scale must be positive".into(),
            ));
        }
        self.gripper.validate()
    }
}

/// World-frame grasp handed to the manipulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspCommand {
    /// Surface point; `surface_offset` is applied by the consumer.
    pub position: Vector3<f64>,
    /// Tool frame: +X approach, +Y jaw.
    pub orientation: UnitQuaternion<f64>,
    pub aperture: f64,
    pub surface_offset: f64,
    pub staging_distance: f64,
    /// N·m, informational.
    pub max_torque: f64,
    pub source_pixel: [usize; 2],
    pub q_value: f64,
}

/// Yaw, pitch and roll (Z-Y-X) of the tool frame that approaches along
/// `-normal` with the jaw chosen by [`jaw_axis`].
pub fn grasp_euler_from_normal(
    normal: &Vector3<f64>,
    fallback_jaw: &Vector3<f64>,
) -> Result<(f64, f64, f64)> {
    let n = normal.try_normalize(1e-12).ok_or(Error::ZeroNormal)?;
    let a = -n;
    let jaw = jaw_axis(&a, fallback_jaw);
    let yaw = a.y.atan2(a.x);
    let pitch = (-a.z).atan2(a.x.hypot(a.y));
    // jaw and palm axes after yaw and pitch only; roll turns the first toward the second
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let y0 = Vector3::new(-sy, cy, 0.0);
    let z0 = Vector3::new(cy * sp, sy * sp, cp);
    let roll = jaw.dot(&z0).atan2(jaw.dot(&y0));
    Ok((yaw, pitch, roll))
}

/// Tool orientation for a grasp against `normal` (world frame), built via the
/// Z-Y-X Euler angles.
pub fn grasp_orientation_from_normal(
    normal: &Vector3<f64>,
    fallback_jaw: &Vector3<f64>,
) -> Result<UnitQuaternion<f64>> {
    let (yaw, pitch, roll) = grasp_euler_from_normal(normal, fallback_jaw)?;
    Ok(UnitQuaternion::from_euler_zyx(yaw, pitch, roll))
}

/// Same rotation built directly from the approach and jaw axes.
pub fn grasp_orientation_direct(
    normal: &Vector3<f64>,
    fallback_jaw: &Vector3<f64>,
) -> Result<UnitQuaternion<f64>> {
    let n = normal.try_normalize(1e-12).ok_or(Error::ZeroNormal)?;
    let a = -n;
    let m: Matrix3<f64> = tool_rotation(&a, &jaw_axis(&a, fallback_jaw));
    Ok(UnitQuaternion::from_rotation_matrix(&m))
}

/// The eight per-pixel network input channels, all in [0, 1] or unit length:
/// rgb, depth / scale (clamped), unit normal, mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelInput {
    pub pixels: Grid<[f32; 8]>,
}

pub fn preprocess(
    view: &ViewSample,
    normals: &NormalMap<f64>,
    mask: &Grid<bool>,
    depth_scale: f64,
) -> Result<ModelInput> {
    view.depth.check_shape(normals)?;
    view.depth.check_shape(mask)?;
    let pixels = Grid::from_fn(view.width(), view.height(), |u, v| {
        let c = view.rgb.get(u, v);
        let z = (view.depth.get(u, v) / depth_scale).clamp(0.0, 1.0);
        let n = normals
            .get(u, v)
            .try_normalize(1e-12)
            .unwrap_or_else(Vector3::zeros);
        let m = if *mask.get(u, v) { 1.0 } else { 0.0 };
        [c[0], c[1], c[2], z, n.x, n.y, n.z, m].map(|x| x as f32)
    });
    Ok(ModelInput { pixels })
}

/// Where the object mask comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskSource {
    /// Pixels of this object id in the view's segmentation.
    Segmentation(u32),
    /// External 8-bit mask, non-zero = object, at the view's resolution.
    External(Grid<bool>),
}

impl MaskSource {
    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::External(read_mask_png(path)?))
    }
}

/// Wall time per stage of one pipeline run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub mask_and_normals: Duration,
    pub preprocess: Duration,
    pub predict: Duration,
    pub select: Duration,
    pub command: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRun {
    pub command: GraspCommand,
    pub selection: Selection,
    pub quality: GraspQualityMap,
    pub normals: NormalMap<f64>,
    pub input: ModelInput,
    pub timings: StageTimings,
}

/// Mask and normals, predict, select, back-project, orient.
///
/// The depth-derived normals drive the orientation, so pixels where they are
/// undefined are never selected.
pub fn run_pipeline(
    view: &ViewSample,
    mask: &MaskSource,
    predictor: &Predictor,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    config.validate()?;
    let t0 = Instant::now();
    let (mask, normals) = rayon::join(
        || -> Result<Grid<bool>> {
            match mask {
                MaskSource::Segmentation(id) => Ok(view.mask(*id)),
                MaskSource::External(m) => {
                    view.depth.check_shape(m)?;
                    Ok(m.clone())
                }
            }
        },
        || depth_to_normals(&view.depth, &view.intrinsics),
    );
    let (mask, normals) = (mask?, normals?);
    if !mask.as_slice().iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let t1 = Instant::now();
    let input = preprocess(view, &normals, &mask, config.depth_normalization_scale)?;
    let t2 = Instant::now();
    let mut quality = predict_quality(view, &mask, &normals, predictor)?;
    quality.suppress(&normals.map(|n| !n.is_zero()))?;
    let t3 = Instant::now();
    let selection = select_grasp_pixel(&quality, &mask, config.threshold)?;
    let t4 = Instant::now();

    let (u, v) = (selection.u, selection.v);
    let z = *view.depth.get(u, v);
    if !(z > 0.0) {
        return Err(Error::InvalidPixelGeometry { u, v });
    }
    let cam = &view.camera_pose;
    let position = cam.transform_point(&back_project(
        PixelCoord::from_index(u, v),
        z,
        &view.intrinsics,
    )?);
    let normal = cam.transform_vector(normals.get(u, v));
    let orientation =
        grasp_orientation_from_normal(&normal, &cam.transform_vector(&Vector3::x_axis()))?;
    let command = GraspCommand {
        position,
        orientation,
        aperture: config.gripper.max_aperture,
        surface_offset: config.grasp.surface_offset,
        staging_distance: config.grasp.staging_distance,
        max_torque: config.max_torque,
        source_pixel: [u, v],
        q_value: selection.q_value,
    };
    let t5 = Instant::now();
    Ok(PipelineRun {
        command,
        selection,
        quality,
        normals,
        input,
        timings: StageTimings {
            mask_and_normals: t1 - t0,
            preprocess: t2 - t1,
            predict: t3 - t2,
            select: t4 - t3,
            command: t5 - t4,
        },
    })
}

/// Per-view and aggregate metrics of one predictor over a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub predictor: String,
    pub threshold: f64,
    /// Sum of counts over all views.
    pub pooled: EvalMetrics,
    /// Averages over views with at least one predicted positive.
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_iou: f64,
    pub views_with_predictions: usize,
    /// Fraction of 0/1 labels that are 1.
    pub positive_base_rate: f64,
    pub views: Vec<ViewReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewReport {
    pub index: usize,
    pub metrics: EvalMetrics,
}

fn describe(spec: &PredictorSpec) -> String {
    match spec {
        PredictorSpec::Heuristic => "heuristic".into(),
        PredictorSpec::Oracle => "oracle".into(),
        PredictorSpec::Heatmap(p) => format!("heatmap:{}", p.display()),
    }
}

/// Heatmap for one dataset view: `PATH` itself if it is a file, otherwise
/// `PATH/view_NNNN.pfm`.
pub fn heatmap_path_for_view(path: &Path, view_dir: &Path) -> PathBuf {
    if path.is_dir() {
        let name = view_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        path.join(format!("{name}.pfm"))
    } else {
        path.to_path_buf()
    }
}

/// Quality map of `spec` for a loaded dataset view.
pub fn predict_view(
    loaded: &LoadedView,
    view_dir: &Path,
    spec: &PredictorSpec,
) -> Result<GraspQualityMap> {
    let view = &loaded.view;
    let mask = view.mask(loaded.target_id);
    let predictor = match spec {
        PredictorSpec::Heatmap(p) => {
            Predictor::Heatmap(read_heatmap(&heatmap_path_for_view(p, view_dir))?)
        }
        other => other.resolve(loaded)?,
    };
    let normals = match predictor {
        Predictor::Heuristic => depth_to_normals(&view.depth, &view.intrinsics)?,
        _ => Grid::new(view.width(), view.height(), Vector3::zeros()),
    };
    predict_quality(view, &mask, &normals, &predictor)
}

/// Evaluates `spec` on every view listed in `root/manifest.json`.
pub fn evaluate_dataset(
    root: &Path,
    spec: &PredictorSpec,
    threshold: f64,
) -> Result<DatasetReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let manifest = DatasetManifest::read(root)?;
    let views = manifest
        .views
        .par_iter()
        .map(|rec| {
            let wrap = |e: Error| Error::View {
                index: rec.index,
                source: Box::new(e),
            };
            let dir = root.join(rec.dir());
            let loaded = read_view(&dir).map_err(wrap)?;
            let labels = loaded
                .labels
                .as_ref()
                .ok_or(Error::MissingLabels)
                .map_err(wrap)?;
            let q = predict_view(&loaded, &dir, spec).map_err(wrap)?;
            Ok(ViewReport {
                index: rec.index,
                metrics: evaluate(&q, &labels.labels, threshold).map_err(wrap)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled = EvalMetrics::pooled(threshold, views.iter().map(|v| &v.metrics));
    let predicted: Vec<&EvalMetrics> = views
        .iter()
        .map(|v| &v.metrics)
        .filter(|m| m.tp + m.fp > 0)
        .collect();
    let mean = |f: fn(&EvalMetrics) -> f64| {
        if predicted.is_empty() {
            0.0
        } else {
            predicted.iter().map(|m| f(m)).sum::<f64>() / predicted.len() as f64
        }
    };
    let positives = pooled.tp + pooled.fn_;
    Ok(DatasetReport {
        predictor: describe(spec),
        threshold,
        pooled,
        mean_precision: mean(|m| m.precision),
        mean_recall: mean(|m| m.recall),
        mean_iou: mean(|m| m.iou),
        views_with_predictions: predicted.len(),
        positive_base_rate: if pooled.labeled() == 0 {
            0.0
        } else {
            positives as f64 / pooled.labeled() as f64
        },
        views,
    })
}

/// Mean and minimum seconds per pipeline stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub mean_s: f64,
    pub min_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub views: usize,
    pub repeat: usize,
    pub runs: usize,
    pub failed_runs: usize,
    pub stages: std::collections::BTreeMap<String, StageStats>,
}

/// Times the heuristic pipeline on every view, `repeat` times each,
/// sequentially. Views without a viable pixel count as failed runs.
pub fn bench_dataset(root: &Path, repeat: usize) -> Result<BenchReport> {
    if repeat == 0 {
        return Err(Error::Config("repeat must be >= 1".into()));
    }
    let manifest = DatasetManifest::read(root)?;
    let config = PipelineConfig::default();
    let mut samples: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    let mut failed = 0;
    for rec in &manifest.views {
        for _ in 0..repeat {
            let t = Instant::now();
            let loaded = read_view(&root.join(rec.dir())).map_err(|e| Error::View {
                index: rec.index,
                source: Box::new(e),
            })?;
            samples
                .entry("load".into())
                .or_default()
                .push(t.elapsed().as_secs_f64());
            let t = Instant::now();
            let result = run_pipeline(
                &loaded.view,
                &MaskSource::Segmentation(loaded.target_id),
                &Predictor::Heuristic,
                &config,
            );
            samples
                .entry("total".into())
                .or_default()
                .push(t.elapsed().as_secs_f64());
            match result {
                Ok(run) => {
                    let st = &run.timings;
                    for (name, d) in [
                        ("mask_and_normals", st.mask_and_normals),
                        ("preprocess", st.preprocess),
                        ("predict", st.predict),
                        ("select", st.select),
                        ("command", st.command),
                    ] {
                        samples
                            .entry(name.into())
                            .or_default()
                            .push(d.as_secs_f64());
                    }
                }
                Err(Error::NoViablePixel | Error::EmptyMask) => failed += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let stages = samples
        .into_iter()
        .map(|(k, v)| {
            let stats = StageStats {
                mean_s: v.iter().sum::<f64>() / v.len() as f64,
                min_s: v.iter().copied().fold(f64::INFINITY, f64::min),
            };
            (k, stats)
        })
        .collect();
    Ok(BenchReport {
        views: manifest.views.len(),
        repeat,
        runs: manifest.views.len() * repeat,
        failed_runs: failed,
        stages,
    })
}
