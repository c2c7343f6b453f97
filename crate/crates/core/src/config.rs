//! `scene.json`: scene objects, gripper, camera grid and intrinsics in one file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{CameraGridSpec, Intrinsics};
use crate::error::{Error, Result};
use crate::geometry::{make_primitive, Pose, Primitive, Scene, SceneObject, TriangleMesh, Vector3};
use crate::grasp::{GenerateOptions, GraspConfig, GripperModel};

pub const DEFAULT_TESSELLATION: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectConfig {
    /// `sphere`, `cylinder`, `box` or `plane`; exclusive with `obj_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obj_path: Option<PathBuf>,
    /// sphere `[r]`, cylinder `[r, h]`, box `[x, y, z]`, plane `[x, y]`.
    /// Ignored for meshes.
    #[serde(default)]
    pub dimensions: Vec<f64>,
    #[serde(default = "Pose::identity")]
    pub pose: Pose<f64>,
    /// Defaults to the 1-based position in `objects`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_id: Option<u32>,
    #[serde(default = "default_tessellation")]
    pub tessellation: usize,
}

fn default_tessellation() -> usize {
    DEFAULT_TESSELLATION
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    1
}

fn default_target() -> u32 {
    1
}

fn default_look_at() -> Vector3<f64> {
    GenerateOptions::default().look_at_target
}

fn default_depth_scale() -> f64 {
    GenerateOptions::default().depth_normalization_scale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub objects: Vec<ObjectConfig>,
    #[serde(default = "default_true")]
    pub ground_plane: bool,
    #[serde(default)]
    pub gripper: GripperModel,
    #[serde(default)]
    pub grasp: GraspConfig,
    #[serde(default)]
    pub grid: CameraGridSpec,
    #[serde(default = "Intrinsics::gripper_camera")]
    pub intrinsics: Intrinsics<f64>,
    #[serde(default = "default_look_at")]
    pub look_at_target: Vector3<f64>,
    #[serde(default = "default_target")]
    pub target_id: u32,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_depth_scale")]
    pub depth_normalization_scale: f64,
}

impl ObjectConfig {
    fn primitive(&self) -> Result<Primitive> {
        let kind = self.kind.as_deref().unwrap_or_default();
        let d = &self.dimensions;
        let want = |n: usize| {
            if d.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{kind} needs {n} dimensions, got {}",
                    d.len()
                )))
            }
        };
        match kind {
            "sphere" => want(1).map(|_| Primitive::Sphere { radius: d[0] }),
            "cylinder" => want(2).map(|_| Primitive::Cylinder {
                radius: d[0],
                height: d[1],
            }),
            "box" => want(3).map(|_| Primitive::Box {
                size: [d[0], d[1], d[2]],
            }),
            "plane" => want(2).map(|_| Primitive::Plane { size: [d[0], d[1]] }),
            other => Err(Error::Config(format!("unknown object kind {other:?}"))),
        }
    }

    /// Mesh in object coordinates; relative `obj_path`s resolve against `base`.
    pub fn mesh(&self, object_id: u32, base: &Path) -> Result<TriangleMesh<f64>> {
        match (&self.kind, &self.obj_path) {
            (Some(_), None) => make_primitive(self.primitive()?, self.tessellation, object_id),
            (None, Some(p)) => TriangleMesh::load_obj(&base.join(p), object_id),
            _ => Err(Error::Config(
                "each object needs exactly one of kind or obj_path".into(),
            )),
        }
    }
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn build_scene(&self, base: &Path) -> Result<Scene<f64>> {
        let objects = self
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let id = o.object_id.unwrap_or(i as u32 + 1);
                Ok(SceneObject {
                    mesh: o.mesh(id, base)?,
                    pose: o.pose,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(objects, self.ground_plane)
    }

    pub fn generate_options(&self) -> GenerateOptions {
        GenerateOptions {
            grid: self.grid.clone(),
            look_at_target: self.look_at_target,
            intrinsics: self.intrinsics,
            gripper: self.gripper.clone(),
            grasp: self.grasp.clone(),
            stride: self.stride,
            target_id: self.target_id,
            depth_normalization_scale: self.depth_normalization_scale,
        }
    }
}
