//! Synthetic grasp perception: render RGB-D views of objects, label every
//! object pixel by simulated parallel-jaw grasps, estimate normals from depth,
//! and turn a grasp-quality map into a world-frame grasp command.
//!
//! The geometric core (`geometry`, `camera`, `d2nt`) is generic over
//! [`Real`] (`f32` or `f64`); the aliases below fix it to `f64`, which every
//! downstream stage uses.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod config;
pub mod d2nt;
pub mod dataset_io;
mod error;
pub mod geometry;
pub mod grasp;
mod grid;
pub mod pipeline;
pub mod predict;
pub mod render;
mod scalar;

pub use error::{Error, Result};
pub use grid::Grid;
pub use scalar::Real;

pub type Vec3 = geometry::Vector3<f64>;
pub type Quat = geometry::UnitQuaternion<f64>;
pub type Pose3 = geometry::Pose<f64>;
pub type Mat3 = geometry::Matrix3<f64>;
pub type Mesh = geometry::TriangleMesh<f64>;
pub type Scene = geometry::Scene<f64>;
pub type AcceleratedScene = geometry::AcceleratedScene<f64>;
pub type Intrinsics = camera::Intrinsics<f64>;
pub type PixelCoord = camera::PixelCoord<f64>;
pub type NormalMap = d2nt::NormalMap<f64>;
