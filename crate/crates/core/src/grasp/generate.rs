use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{label_view, GraspConfig, GripperModel};
use crate::camera::{sample_camera_grid, CameraGridSpec, Intrinsics, GRID_PRNG};
use crate::d2nt::D2NT_VARIANT;
use crate::dataset_io::{write_view, DatasetManifest, ViewRecord, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::geometry::{AcceleratedScene, Scene, Vector3};
use crate::render::{render_view, RGB_MODEL};

/// Everything besides the scene that determines a generated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerateOptions {
    pub grid: CameraGridSpec,
    /// Nominal aim point of every camera before jitter.
    pub look_at_target: Vector3<f64>,
    pub intrinsics: Intrinsics<f64>,
    pub gripper: GripperModel,
    pub grasp: GraspConfig,
    pub stride: usize,
    pub target_id: u32,
    /// Recorded for consumers that normalize depth to [0, 1].
    pub depth_normalization_scale: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            grid: CameraGridSpec::default(),
            look_at_target: Vector3::new(0.0, 0.0, 0.15),
            intrinsics: Intrinsics::gripper_camera(),
            gripper: GripperModel::default(),
            grasp: GraspConfig::default(),
            stride: 1,
            target_id: 1,
            depth_normalization_scale: 2.0,
        }
    }
}

pub fn view_dir_name(index: usize) -> String {
    format!("view_{index:04}")
}

/// Renders, labels and writes one view per grid pose, then `manifest.json`.
/// Views are processed in parallel; the output is identical for identical
/// inputs.
pub fn generate_dataset(
    scene: &Scene<f64>,
    opts: &GenerateOptions,
    out: &Path,
) -> Result<DatasetManifest> {
    opts.intrinsics.validate()?;
    opts.gripper.validate()?;
    if opts.stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    let accel = AcceleratedScene::build(scene)?;
    if !accel.contains_object(opts.target_id) {
        return Err(Error::TargetAbsent(opts.target_id));
    }
    let poses = sample_camera_grid(&opts.grid, opts.look_at_target)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let views = poses
        .par_iter()
        .enumerate()
        .map(|(index, gv)| {
            let wrap = |e: Error| Error::View {
                index,
                source: Box::new(e),
            };
            let view = render_view(&accel, &gv.pose, &opts.intrinsics);
            let labels = label_view(
                &accel,
                &view,
                &opts.gripper,
                &opts.grasp,
                opts.target_id,
                opts.stride,
            )
            .map_err(wrap)?;
            let name = view_dir_name(index);
            write_view(&view, Some(&labels), opts.target_id, &out.join(&name)).map_err(wrap)?;
            let rel = |file: &str| format!("{name}/{file}");
            Ok(ViewRecord {
                index,
                grid_x: gv.x_index,
                grid_z: gv.z_index,
                camera_pose: gv.pose,
                jitter: gv.jitter,
                rgb: rel(crate::dataset_io::RGB_FILE),
                depth: rel(crate::dataset_io::DEPTH_FILE),
                segmentation: rel(crate::dataset_io::SEGMENTATION_FILE),
                normals: rel(crate::dataset_io::NORMALS_FILE),
                labels: rel(crate::dataset_io::LABELS_FILE),
                attempted_pixels: labels.attempted,
                positive_pixels: labels.positives(),
                unsampled_object_pixels: labels.unsampled_object_pixels,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        intrinsics: opts.intrinsics,
        grid: opts.grid.clone(),
        look_at_target: opts.look_at_target,
        prng: GRID_PRNG.to_string(),
        gripper: opts.gripper.clone(),
        grasp: opts.grasp.clone(),
        stride: opts.stride,
        target_id: opts.target_id,
        rgb_model: RGB_MODEL.to_string(),
        d2nt_variant: D2NT_VARIANT.to_string(),
        depth_normalization_scale: opts.depth_normalization_scale,
        views,
    };
    manifest.write(out)?;
    Ok(manifest)
}
