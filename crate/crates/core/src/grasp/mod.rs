//! Grasp labeling: plan a parallel-jaw grasp at an object pixel, check it
//! kinematically against the scene, and label every sampled object pixel.

mod generate;

pub use generate::{generate_dataset, GenerateOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{back_project, PixelCoord};
use crate::error::{Error, Result};
use crate::geometry::{AcceleratedScene, Matrix3, OrientedBox, Pose, Ray, UnitQuaternion, Vector3};
use crate::grid::Grid;
use crate::render::ViewSample;

pub type Vec3 = Vector3<f64>;

/// Below this `‖up × approach‖` the approach counts as vertical.
pub const VERTICAL_APPROACH_EPS: f64 = 1e-6;
/// Half-length of the line used to measure object width along the jaw axis.
const WIDTH_PROBE_SPAN: f64 = 1.0;

/// Parametric parallel-jaw gripper in its tool frame: +X approach, +Y jaw,
/// +Z palm normal. The palm's front face sits `reach` ahead of the tool
/// origin and the fingers extend `finger_length` beyond it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperModel {
    /// Full gap between the open fingers' inner faces.
    pub max_aperture: f64,
    pub finger_length: f64,
    /// Finger extent along the jaw axis.
    pub finger_thickness: f64,
    /// Finger extent along the palm normal.
    pub finger_width: f64,
    /// Palm extent along the jaw axis.
    pub palm_width: f64,
    /// Palm extent along the palm normal.
    pub palm_height: f64,
    /// Palm extent along the approach axis.
    pub palm_depth: f64,
    pub reach: f64,
    pub pad_points_per_finger: usize,
    /// Pad rays that must reach the target for a finger to count as in contact.
    pub contact_min: usize,
    /// Allowed depth of the open gripper inside the target.
    pub penetration_tolerance: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        Self {
            max_aperture: 0.10,
            finger_length: 0.05,
            finger_thickness: 0.01,
            finger_width: 0.02,
            palm_width: 0.08,
            palm_height: 0.06,
            palm_depth: 0.04,
            reach: 0.34,
            pad_points_per_finger: 5,
            contact_min: 1,
            penetration_tolerance: 0.001,
        }
    }
}

/// Which finger: the one on the −Y side of the tool frame, or the +Y side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Finger {
    Left,
    Right,
}

impl GripperModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_aperture", self.max_aperture),
            ("finger_length", self.finger_length),
            ("finger_thickness", self.finger_thickness),
            ("finger_width", self.finger_width),
            ("palm_width", self.palm_width),
            ("palm_height", self.palm_height),
            ("palm_depth", self.palm_depth),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!(
                    "gripper.{name} must be positive, got {x}"
                )));
            }
        }
        if !(self.reach >= 0.0) || !(self.penetration_tolerance >= 0.0) {
            return Err(Error::Config(
                "gripper reach and penetration tolerance must be >= 0".into(),
            ));
        }
        if self.pad_points_per_finger == 0
            || self.contact_min == 0
            || self.contact_min > self.pad_points_per_finger
        {
            return Err(Error::Config(format!(
                "need 1 <= contact_min ({}) <= pad_points_per_finger ({})",
                self.contact_min, self.pad_points_per_finger
            )));
        }
        Ok(())
    }

    /// Copy with a different opening.
    pub fn with_aperture(&self, max_aperture: f64) -> Self {
        Self {
            max_aperture,
            ..self.clone()
        }
    }

    /// Contact sample points on a finger's inner pad, tool frame, evenly spread
    /// along the finger's length on its center line.
    pub fn pad_points(&self, finger: Finger) -> Vec<Vec3> {
        let y = match finger {
            Finger::Left => -self.max_aperture / 2.0,
            Finger::Right => self.max_aperture / 2.0,
        };
        let n = self.pad_points_per_finger;
        (0..n)
            .map(|i| {
                Vec3::new(
                    self.reach + self.finger_length * (i as f64 + 0.5) / n as f64,
                    y,
                    0.0,
                )
            })
            .collect()
    }

    /// Palm and both fingers at the open configuration, tool frame.
    pub fn body_boxes(&self) -> [OrientedBox<f64>; 3] {
        let palm = OrientedBox::new(
            Pose::from_translation(Vec3::new(self.reach - self.palm_depth / 2.0, 0.0, 0.0)),
            Vec3::new(
                self.palm_depth / 2.0,
                self.palm_width / 2.0,
                self.palm_height / 2.0,
            ),
        );
        let finger = |sign: f64| {
            OrientedBox::new(
                Pose::from_translation(Vec3::new(
                    self.reach + self.finger_length / 2.0,
                    sign * (self.max_aperture + self.finger_thickness) / 2.0,
                    0.0,
                )),
                Vec3::new(
                    self.finger_length / 2.0,
                    self.finger_thickness / 2.0,
                    self.finger_width / 2.0,
                ),
            )
        };
        [palm, finger(-1.0), finger(1.0)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspConfig {
    /// Gripper origin distance from the surface point along the normal.
    pub surface_offset: f64,
    /// Pre-grasp standoff; recorded, never collision-checked.
    pub staging_distance: f64,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            surface_offset: 0.35,
            staging_distance: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspPose {
    pub pixel: PixelCoord<f64>,
    /// World frame.
    pub surface_point: Vec3,
    /// Outward unit surface normal, world frame.
    pub normal: Vec3,
    /// Tool frame in the world at the grasp: origin `surface_offset` out
    /// along the normal, +X along `-normal`.
    pub gripper_pose: Pose<f64>,
    /// Same orientation, `staging_distance` out along the normal.
    pub staging_pose: Pose<f64>,
    pub staging_distance: f64,
    pub surface_offset: f64,
}

impl GraspPose {
    /// Grasp against `normal` (world, outward) at `surface_point`;
    /// `camera_right` breaks the roll for vertical approaches.
    pub fn at(
        pixel: PixelCoord<f64>,
        surface_point: Vec3,
        normal: Vec3,
        camera_right: &Vec3,
        config: &GraspConfig,
    ) -> Result<Self> {
        let normal = normal.try_normalize(1e-12).ok_or(Error::ZeroNormal)?;
        let approach = -normal;
        let jaw = jaw_axis(&approach, camera_right);
        let orientation = UnitQuaternion::from_rotation_matrix(&tool_rotation(&approach, &jaw));
        Ok(Self {
            pixel,
            surface_point,
            normal,
            gripper_pose: Pose::new(surface_point + normal * config.surface_offset, orientation),
            staging_pose: Pose::new(
                surface_point + normal * config.staging_distance,
                orientation,
            ),
            staging_distance: config.staging_distance,
            surface_offset: config.surface_offset,
        })
    }

    pub fn approach_axis(&self) -> Vec3 {
        self.gripper_pose.transform_vector(&Vec3::x_axis())
    }

    pub fn jaw_axis(&self) -> Vec3 {
        self.gripper_pose.transform_vector(&Vec3::y_axis())
    }
}

/// Jaw axis for a grasp approaching along `approach` (unit).
///
/// Horizontal (`up × approach`) unless the approach is vertical, in which case
/// `fallback` (normally the camera's right axis) is projected orthogonal to
/// the approach. The sign is chosen so the axis points toward world +X, or
/// toward +Y when it is orthogonal to X.
pub fn jaw_axis(approach: &Vec3, fallback: &Vec3) -> Vec3 {
    let up = Vec3::z_axis();
    let horizontal = up.cross(approach);
    let jaw = if horizontal.norm() >= VERTICAL_APPROACH_EPS {
        horizontal.normalize()
    } else {
        [*fallback, Vec3::x_axis(), Vec3::y_axis()]
            .iter()
            .find_map(|f| (*f - *approach * f.dot(approach)).try_normalize(1e-9))
            .expect("x or y axis is never parallel to a vertical approach")
    };
    let flip = if jaw.x.abs() > 1e-12 {
        jaw.x < 0.0
    } else {
        jaw.y < 0.0
    };
    if flip {
        -jaw
    } else {
        jaw
    }
}

/// Tool rotation with columns (approach, jaw, approach × jaw).
pub fn tool_rotation(approach: &Vec3, jaw: &Vec3) -> Matrix3<f64> {
    Matrix3::from_columns(*approach, *jaw, approach.cross(jaw))
}

/// Builds the grasp for an object pixel of `view`.
pub fn plan_grasp_pose(
    pixel: PixelCoord<f64>,
    view: &ViewSample,
    target_id: u32,
    config: &GraspConfig,
) -> Result<GraspPose> {
    let (u, v) = pixel
        .to_index(view.width(), view.height())
        .ok_or(Error::PixelOffObject {
            u: pixel.u.max(0.0) as usize,
            v: pixel.v.max(0.0) as usize,
        })?;
    if u32::from(*view.segmentation.get(u, v)) != target_id {
        return Err(Error::PixelOffObject { u, v });
    }
    let z = *view.depth.get(u, v);
    let n_cam = *view.normals.get(u, v);
    if !(z > 0.0) || n_cam.is_zero() {
        return Err(Error::InvalidPixelGeometry { u, v });
    }
    let cam = &view.camera_pose;
    let surface_point = cam.transform_point(&back_project(pixel, z, &view.intrinsics)?);
    let normal = cam.transform_vector(&n_cam);
    GraspPose::at(
        pixel,
        surface_point,
        normal,
        &cam.transform_vector(&Vec3::x_axis()),
        config,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    None,
    NoFingerContact,
    OneFingerContact,
    ExternalCollision,
    ApertureExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub success: bool,
    pub failure_reason: FailureReason,
}

impl GraspOutcome {
    fn from_reason(failure_reason: FailureReason) -> Self {
        Self {
            success: failure_reason == FailureReason::None,
            failure_reason,
        }
    }
}

/// Result of the closing sweep alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepResult {
    /// Per pad point: did its ray reach the target first?
    pub left: Vec<bool>,
    pub right: Vec<bool>,
    pub contact_min: usize,
}

impl SweepResult {
    pub fn left_contact(&self) -> bool {
        self.left.iter().filter(|&&h| h).count() >= self.contact_min
    }

    pub fn right_contact(&self) -> bool {
        self.right.iter().filter(|&&h| h).count() >= self.contact_min
    }
}

/// Closes both fingers: every pad point casts a ray along the jaw toward the
/// opposite finger, travelling at most the aperture. A ray counts when the
/// first surface it meets is the target.
pub fn closing_sweep(
    scene: &AcceleratedScene<f64>,
    grasp: &GraspPose,
    gripper: &GripperModel,
    target_id: u32,
) -> SweepResult {
    let pose = &grasp.gripper_pose;
    let jaw = grasp.jaw_axis();
    let cast = |finger: Finger, dir: Vec3| -> Vec<bool> {
        gripper
            .pad_points(finger)
            .iter()
            .map(|p| {
                let ray = Ray {
                    origin: pose.transform_point(p),
                    direction: dir,
                };
                scene
                    .raycast_max(&ray, gripper.max_aperture)
                    .is_some_and(|h| h.object_id == target_id)
            })
            .collect()
    };
    SweepResult {
        left: cast(Finger::Left, jaw),
        right: cast(Finger::Right, -jaw),
        contact_min: gripper.contact_min,
    }
}

/// Widest target chord along the jaw axis through the pad lines, taking on
/// each line the interval nearest the grasp center.
pub fn jaw_axis_width(
    scene: &AcceleratedScene<f64>,
    grasp: &GraspPose,
    gripper: &GripperModel,
    target_id: u32,
) -> f64 {
    let pose = &grasp.gripper_pose;
    let jaw = grasp.jaw_axis();
    let mut widest = 0.0f64;
    for p in gripper.pad_points(Finger::Left) {
        let center = pose.transform_point(&Vec3::new(p.x, 0.0, 0.0));
        let ray = Ray {
            origin: center - jaw * WIDTH_PROBE_SPAN,
            direction: jaw,
        };
        let hits = scene.hits_along(&ray, 2.0 * WIDTH_PROBE_SPAN, |id| id == target_id);
        let mut best: Option<(f64, f64)> = None;
        for pair in hits.chunks(2) {
            let (a, b) = match pair {
                [a, b] => (a.t, b.t),
                [a] => (a.t, a.t),
                _ => unreachable!(),
            };
            let gap = if (a..=b).contains(&WIDTH_PROBE_SPAN) {
                0.0
            } else {
                (a - WIDTH_PROBE_SPAN)
                    .abs()
                    .min((b - WIDTH_PROBE_SPAN).abs())
            };
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, b - a));
            }
        }
        if let Some((_, w)) = best {
            widest = widest.max(w);
        }
    }
    widest
}

/// True when any open-pose body box touches the ground or a non-target
/// object, or sinks into the target deeper than the tolerance.
pub fn body_collides(
    scene: &AcceleratedScene<f64>,
    grasp: &GraspPose,
    gripper: &GripperModel,
    target_id: u32,
) -> bool {
    let pose = &grasp.gripper_pose;
    gripper.body_boxes().iter().any(|local| {
        let world = OrientedBox::new(pose.compose(&local.pose), local.half_extents);
        if scene
            .objects_overlapping(&world)
            .iter()
            .any(|&id| id != target_id)
        {
            return true;
        }
        let core = world.shrunk(gripper.penetration_tolerance);
        scene.objects_overlapping(&core).contains(&target_id)
            || scene.object_contains(target_id, &core.pose.position)
    })
}

/// Kinematic grasp check at the final pose. Aperture, then body collision,
/// then the closing sweep decide the outcome.
pub fn attempt_grasp(
    scene: &AcceleratedScene<f64>,
    grasp: &GraspPose,
    gripper: &GripperModel,
    target_id: u32,
) -> GraspOutcome {
    if jaw_axis_width(scene, grasp, gripper, target_id) > gripper.max_aperture {
        return GraspOutcome::from_reason(FailureReason::ApertureExceeded);
    }
    if body_collides(scene, grasp, gripper, target_id) {
        return GraspOutcome::from_reason(FailureReason::ExternalCollision);
    }
    let sweep = closing_sweep(scene, grasp, gripper, target_id);
    let reason = match (sweep.left_contact(), sweep.right_contact()) {
        (true, true) => FailureReason::None,
        (false, false) => FailureReason::NoFingerContact,
        _ => FailureReason::OneFingerContact,
    };
    GraspOutcome::from_reason(reason)
}

pub const LABEL_SUCCESS: i8 = 1;
pub const LABEL_FAILURE: i8 = 0;
pub const LABEL_INDETERMINATE: i8 = -1;

/// Per-pixel grasp ground truth in {1, 0, −1}.
#[derive(Clone, Debug, PartialEq)]
pub struct GraspLabelMap {
    pub labels: Grid<i8>,
    /// Outcome for every attempted pixel, `None` elsewhere.
    pub outcomes: Grid<Option<GraspOutcome>>,
    pub stride: usize,
    pub attempted: usize,
    /// Object pixels left at −1 because the stride skipped them.
    pub unsampled_object_pixels: usize,
}

impl GraspLabelMap {
    pub fn from_labels(labels: Grid<i8>) -> Self {
        let attempted = labels
            .as_slice()
            .iter()
            .filter(|&&l| l != LABEL_INDETERMINATE)
            .count();
        let outcomes = labels.map(|_| None);
        Self {
            labels,
            outcomes,
            stride: 1,
            attempted,
            unsampled_object_pixels: 0,
        }
    }

    pub fn positives(&self) -> usize {
        self.labels
            .as_slice()
            .iter()
            .filter(|&&l| l == LABEL_SUCCESS)
            .count()
    }
}

/// Whether the labeling lattice includes pixel `(u, v)`.
#[inline]
pub fn on_stride(u: usize, v: usize, stride: usize) -> bool {
    u.is_multiple_of(stride) && v.is_multiple_of(stride)
}

/// Attempts a grasp at every target pixel on the stride lattice
/// (`u % stride == 0 && v % stride == 0`); all other pixels stay −1, so a
/// view where the target is out of sight labels nothing. Fails only when the
/// scene has no object with `target_id`.
/// Attempts are independent and run in parallel.
pub fn label_view(
    scene: &AcceleratedScene<f64>,
    view: &ViewSample,
    gripper: &GripperModel,
    config: &GraspConfig,
    target_id: u32,
    stride: usize,
) -> Result<GraspLabelMap> {
    if stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    gripper.validate()?;
    let (w, h) = (view.width(), view.height());
    let mut object_pixels = 0usize;
    let mut sampled = Vec::new();
    for (u, v, &s) in view.segmentation.iter_pixels() {
        if u32::from(s) == target_id {
            object_pixels += 1;
            if on_stride(u, v, stride) {
                sampled.push((u, v));
            }
        }
    }
    if !scene.contains_object(target_id) {
        return Err(Error::TargetAbsent(target_id));
    }
    let results: Vec<Result<GraspOutcome>> = sampled
        .par_iter()
        .map(|&(u, v)| {
            let grasp = plan_grasp_pose(PixelCoord::from_index(u, v), view, target_id, config)?;
            Ok(attempt_grasp(scene, &grasp, gripper, target_id))
        })
        .collect();
    let mut labels = Grid::new(w, h, LABEL_INDETERMINATE);
    let mut outcomes = Grid::new(w, h, None);
    for (&(u, v), r) in sampled.iter().zip(results) {
        let outcome = r?;
        labels.set(
            u,
            v,
            if outcome.success {
                LABEL_SUCCESS
            } else {
                LABEL_FAILURE
            },
        );
        outcomes.set(u, v, Some(outcome));
    }
    Ok(GraspLabelMap {
        labels,
        outcomes,
        stride,
        attempted: sampled.len(),
        unsampled_object_pixels: object_pixels - sampled.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaw_axis_rules() {
        // normal (0,1,0) → approach (0,-1,0) → horizontal jaw along +X
        assert_eq!(
            jaw_axis(&Vec3::new(0.0, -1.0, 0.0), &Vec3::x_axis()),
            Vec3::x_axis()
        );
        assert_eq!(
            jaw_axis(&Vec3::new(0.0, 1.0, 0.0), &Vec3::x_axis()),
            Vec3::x_axis()
        );
        // approach along X: jaw orthogonal to X, +Y tie-break
        assert_eq!(jaw_axis(&Vec3::x_axis(), &Vec3::x_axis()), Vec3::y_axis());
        // vertical approach falls back to the camera right axis
        let j = jaw_axis(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(-0.6, 0.8, 0.0));
        assert!((j - Vec3::new(0.6, -0.8, 0.0)).norm() < 1e-12);
        let j = jaw_axis(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(j, Vec3::x_axis());
    }

    #[test]
    fn pad_points_lie_on_inner_faces() {
        let g = GripperModel::default();
        let [_, left, right] = g.body_boxes();
        for (pads, finger) in [
            (g.pad_points(Finger::Left), left),
            (g.pad_points(Finger::Right), right),
        ] {
            assert_eq!(pads.len(), 5);
            for p in pads {
                assert!(finger.contains(&p));
                assert!((p.y.abs() - g.max_aperture / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gripper_validation() {
        assert!(GripperModel::default().validate().is_ok());
        assert!(GripperModel::default()
            .with_aperture(0.0)
            .validate()
            .is_err());
        let g = GripperModel {
            contact_min: 6,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }
}
