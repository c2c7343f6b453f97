//! Shared scenes and brute-force oracles for the integration tests.
#![allow(dead_code)]

use grasp_core::camera::{sample_camera_grid, CameraGridSpec, Intrinsics};
use grasp_core::geometry::{
    intersect_triangle, make_primitive, AcceleratedScene, Pose, Primitive, Ray, Scene, SceneObject,
    Vector3, GROUND_ID,
};
use grasp_core::grasp::{Finger, GraspPose, GripperModel};

pub type V = Vector3<f64>;

pub const CYL_RADIUS: f64 = 0.04;
pub const CYL_HEIGHT: f64 = 0.30;
pub const TARGET: u32 = 1;
pub const AIM: [f64; 3] = [0.0, 0.0, 0.15];

/// Upright cylinder standing on the ground at the origin.
pub fn canonical_scene(tessellation: usize) -> Scene<f64> {
    let mesh = make_primitive(
        Primitive::Cylinder {
            radius: CYL_RADIUS,
            height: CYL_HEIGHT,
        },
        tessellation,
        TARGET,
    )
    .unwrap();
    let pose = Pose::from_translation(V::new(0.0, 0.0, CYL_HEIGHT / 2.0));
    Scene::new(vec![SceneObject { mesh, pose }], true).unwrap()
}

/// Square image with the gripper camera's horizontal field of view.
pub fn square_intrinsics(n: usize) -> Intrinsics<f64> {
    let f = 554.26 * n as f64 / 640.0;
    let c = n as f64 / 2.0;
    Intrinsics::new(f, f, c, c, n, n).unwrap()
}

/// 2 × 2 camera grid around the cylinder, aimed at mid-height without jitter.
pub fn canonical_grid() -> CameraGridSpec {
    CameraGridSpec {
        x_count: 2,
        z_count: 2,
        x_range: [-0.3, 0.3],
        z_range: [0.05, 0.3],
        y_fixed: 0.5,
        jitter_xy: [0.0, 0.0],
        jitter_z: [0.0, 0.0],
        seed: 7,
    }
}

pub fn canonical_poses() -> Vec<Pose<f64>> {
    sample_camera_grid(&canonical_grid(), V::from(AIM))
        .unwrap()
        .into_iter()
        .map(|g| g.pose)
        .collect()
}

/// Nearest hit by testing every triangle and the ground plane in turn.
pub fn brute_raycast(
    scene: &AcceleratedScene<f64>,
    ray: &Ray<f64>,
    t_max: f64,
) -> Option<(f64, u32, usize)> {
    let mut best: Option<(f64, u32, usize)> = None;
    let mut offer = |cand: (f64, u32, usize)| {
        let better = match best {
            None => true,
            Some(b) => (cand.0, cand.1, cand.2) < (b.0, b.1, b.2),
        };
        if better {
            best = Some(cand);
        }
    };
    for i in 0..scene.triangle_count() {
        let (tri, id, k) = scene.triangle(i);
        if let Some(t) = intersect_triangle(ray, &tri, t_max) {
            offer((t, id, k));
        }
    }
    if scene.has_ground_plane() && ray.direction.z != 0.0 {
        let t = -ray.origin.z / ray.direction.z;
        if t > 0.0 && t <= t_max {
            offer((t, GROUND_ID, usize::MAX));
        }
    }
    best
}

pub fn object_triangles(scene: &AcceleratedScene<f64>, id: u32) -> Vec<[V; 3]> {
    (0..scene.triangle_count())
        .map(|i| scene.triangle(i))
        .filter(|t| t.1 == id)
        .map(|t| t.0)
        .collect()
}

/// Generalized winding number of a closed triangle mesh around `p`.
pub fn winding_number(tris: &[[V; 3]], p: &V) -> f64 {
    let mut total = 0.0;
    for t in tris {
        let (a, b, c) = (t[0] - *p, t[1] - *p, t[2] - *p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

pub const VOXEL: f64 = 0.001;

/// Marches each pad point of `finger` toward the other jaw in 1 mm steps up
/// to the aperture. A pad touches when it reaches the inside of the target
/// before the ground (z < 0). Returns the number of touching pads.
pub fn voxel_pad_contacts(
    target: &[[V; 3]],
    grasp: &GraspPose,
    gripper: &GripperModel,
    finger: Finger,
) -> usize {
    let jaw = grasp.gripper_pose.transform_vector(&V::y_axis());
    let dir = match finger {
        Finger::Left => jaw,
        Finger::Right => -jaw,
    };
    let steps = (gripper.max_aperture / VOXEL).round() as usize;
    gripper
        .pad_points(finger)
        .iter()
        .filter(|p| {
            let start = grasp.gripper_pose.transform_point(p);
            for k in 0..=steps {
                let x = start + dir * (k as f64 * VOXEL);
                if x.z < 0.0 {
                    return false;
                }
                if winding_number(target, &x) > 0.5 {
                    return true;
                }
            }
            false
        })
        .count()
}

pub fn angle_deg(a: &V, b: &V) -> f64 {
    a.angle(b).to_degrees()
}

/// Outward normal of the ideal cylinder at a point on its surface.
pub fn cylinder_normal(p: &V) -> V {
    let radial = (p.x * p.x + p.y * p.y).sqrt();
    let to_side = (radial - CYL_RADIUS).abs();
    let to_top = (p.z - CYL_HEIGHT).abs();
    let to_bottom = p.z.abs();
    if to_side <= to_top && to_side <= to_bottom {
        V::new(p.x / radial, p.y / radial, 0.0)
    } else if to_top < to_bottom {
        V::z_axis()
    } else {
        -V::z_axis()
    }
}

/// Distance from `p` to the ideal cylinder surface.
pub fn cylinder_surface_distance(p: &V) -> f64 {
    let radial = (p.x * p.x + p.y * p.y).sqrt();
    let dr = radial - CYL_RADIUS;
    let dz = (p.z - CYL_HEIGHT / 2.0).abs() - CYL_HEIGHT / 2.0;
    if dr <= 0.0 && dz <= 0.0 {
        -dr.max(dz)
    } else {
        (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt()
    }
}
