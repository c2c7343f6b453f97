//! Vectors, rotations, poses, triangle meshes and BVH-accelerated ray casting.
//!
//! World frame is Z-up with the ground plane at z = 0.

mod bvh;
mod mesh;
mod obb;
mod pose;
mod ray;
mod rotation;
mod scene;
mod vector;

pub use bvh::{Aabb, Bvh, MAX_LEAF_SIZE};
pub use mesh::{make_primitive, Primitive, TriangleMesh, MIN_TESSELLATION};
pub use obb::{triangle_overlaps_centered_box, OrientedBox};
pub use pose::{look_at, Pose};
pub use ray::{
    face_toward, intersect_triangle, triangle_normal, Ray, RayHit, DET_EPSILON, GROUND_ID,
    GROUND_TRIANGLE,
};
pub use rotation::{quat_from_euler_zyx, Matrix3, UnitQuaternion};
pub use scene::{build_bvh, AcceleratedScene, Scene, SceneObject};
pub use vector::Vector3;
