//! Raycasting RGB-D renderer.

use rayon::prelude::*;

use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::geometry::{AcceleratedScene, Pose, Ray, Vector3, GROUND_ID};
use crate::grid::Grid;

/// Name recorded in manifests for the color channel.
pub const RGB_MODEL: &str = "synthetic-lambertian-headlight";

/// One rendered camera view.
///
/// Background pixels carry depth 0, segmentation 0 and a zero normal.
/// Normals are unit vectors in the camera frame facing the camera.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewSample {
    /// Linear RGB in `[0, 1]`.
    pub rgb: Grid<[f64; 3]>,
    /// Planar depth in meters.
    pub depth: Grid<f64>,
    pub segmentation: Grid<u16>,
    pub normals: Grid<Vector3<f64>>,
    pub camera_pose: Pose<f64>,
    pub intrinsics: Intrinsics<f64>,
}

impl ViewSample {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    /// World-frame viewing direction through pixel `(u, v)`.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Ray<f64> {
        let d = self
            .intrinsics
            .pixel_direction(u as f64, v as f64)
            .normalize();
        Ray {
            origin: self.camera_pose.position,
            direction: self.camera_pose.transform_vector(&d),
        }
    }

    pub fn mask(&self, object_id: u32) -> Grid<bool> {
        self.segmentation.map(|&s| u32::from(s) == object_id)
    }

    /// Checks the shared-support invariant: depth > 0 ⇔ segmentation ≠ 0 ⇔
    /// normal ≠ 0, with unit camera-facing normals.
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.depth.width() != self.intrinsics.width
            || self.depth.height() != self.intrinsics.height
        {
            return Err(Error::DimensionMismatch {
                expected_w: self.intrinsics.width,
                expected_h: self.intrinsics.height,
                got_w: self.depth.width(),
                got_h: self.depth.height(),
            });
        }
        self.depth.check_shape(&self.rgb)?;
        self.depth.check_shape(&self.segmentation)?;
        self.depth.check_shape(&self.normals)?;
        for (u, v, &z) in self.depth.iter_pixels() {
            let seg = *self.segmentation.get(u, v);
            let n = self.normals.get(u, v);
            let fail = |what: &str| Err(Error::ChannelSupport(format!("pixel ({u}, {v}): {what}")));
            if !z.is_finite() || z < 0.0 {
                return fail("depth is negative or not finite");
            }
            let has = z > 0.0;
            if has != (seg != 0) || has != !n.is_zero() {
                return fail("depth, segmentation and normal disagree on support");
            }
            if has {
                if (n.norm() - 1.0).abs() > 1e-6 {
                    return fail("normal is not unit length");
                }
                let d = self.intrinsics.pixel_direction(u as f64, v as f64);
                if n.dot(&d) >= 0.0 {
                    return fail("normal faces away from the camera");
                }
            }
            if self.rgb.get(u, v).iter().any(|c| !(0.0..=1.0).contains(c)) {
                return fail("rgb outside [0, 1]");
            }
        }
        Ok(())
    }
}

/// Fixed diffuse color per object id.
pub fn albedo(object_id: u32) -> [f64; 3] {
    const PALETTE: [[f64; 3]; 6] = [
        [0.20, 0.45, 0.85],
        [0.85, 0.35, 0.20],
        [0.25, 0.75, 0.35],
        [0.80, 0.70, 0.20],
        [0.60, 0.30, 0.75],
        [0.20, 0.70, 0.75],
    ];
    if object_id == GROUND_ID {
        [0.5, 0.5, 0.5]
    } else {
        PALETTE[(object_id.saturating_sub(1) as usize) % PALETTE.len()]
    }
}

/// Casts one ray through the center of every pixel.
pub fn render_view(
    scene: &AcceleratedScene<f64>,
    pose: &Pose<f64>,
    intr: &Intrinsics<f64>,
) -> ViewSample {
    let (w, h) = (intr.width, intr.height);
    let rot = pose.rotation_matrix();
    let rot_t = rot.transpose();
    let rows: Vec<Vec<(f64, u16, Vector3<f64>, [f64; 3])>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .map(|u| {
                    let d_cam = intr.pixel_direction(u as f64, v as f64).normalize();
                    let ray = Ray {
                        origin: pose.position,
                        direction: rot.mul_vec(&d_cam),
                    };
                    match scene.raycast(&ray) {
                        Some(hit) => {
                            let n_cam = rot_t.mul_vec(&hit.face_normal);
                            let shade = (-n_cam.dot(&d_cam)).clamp(0.0, 1.0);
                            let rgb = albedo(hit.object_id).map(|c| (c * shade).clamp(0.0, 1.0));
                            (hit.t * d_cam.z, hit.object_id as u16, n_cam, rgb)
                        }
                        None => (0.0, 0, Vector3::zeros(), [0.0; 3]),
                    }
                })
                .collect()
        })
        .collect();

    let n = w * h;
    let (mut depth, mut seg, mut normals, mut rgb) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for (z, s, nc, c) in rows.into_iter().flatten() {
        depth.push(z);
        seg.push(s);
        normals.push(nc);
        rgb.push(c);
    }
    ViewSample {
        rgb: Grid::from_vec(w, h, rgb).expect("sized"),
        depth: Grid::from_vec(w, h, depth).expect("sized"),
        segmentation: Grid::from_vec(w, h, seg).expect("sized"),
        normals: Grid::from_vec(w, h, normals).expect("sized"),
        camera_pose: *pose,
        intrinsics: *intr,
    }
}
