use serde::{Deserialize, Serialize};

use super::{Matrix3, UnitQuaternion, Vector3};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rigid transform from a local frame into its parent frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Pose<T> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vector3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_translation(position: Vector3<T>) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.position + self.orientation.rotate(&other.position),
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Self {
        let inv = self.orientation.inverse();
        Self::new(-inv.rotate(&self.position), inv)
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.orientation.rotate(p) + self.position
    }

    pub fn transform_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        self.orientation.rotate(v)
    }

    pub fn inverse_transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.orientation.inverse().rotate(&(*p - self.position))
    }

    pub fn inverse_transform_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        self.orientation.inverse().rotate(v)
    }

    pub fn rotation_matrix(&self) -> Matrix3<T> {
        self.orientation.to_rotation_matrix()
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        Pose::new(self.position.cast(), self.orientation.cast())
    }
}

/// Camera pose at `eye` looking at `target`.
///
/// The camera frame has +Z forward, +X right and +Y down, so image rows grow
/// downward.
pub fn look_at<T: Real>(
    eye: Vector3<T>,
    target: Vector3<T>,
    world_up: Vector3<T>,
) -> Result<Pose<T>> {
    let eps = T::lit(1e-12);
    let forward = (target - eye)
        .try_normalize(eps)
        .ok_or(Error::DegenerateLookAt("eye coincides with target"))?;
    let up = world_up
        .try_normalize(eps)
        .ok_or(Error::DegenerateLookAt("zero up vector"))?;
    let right = forward
        .cross(&up)
        .try_normalize(T::lit(1e-9))
        .ok_or(Error::DegenerateLookAt(
            "view direction parallel to up vector",
        ))?;
    let down = forward.cross(&right);
    let m = Matrix3::from_columns(right, down, forward);
    Ok(Pose::new(eye, UnitQuaternion::from_rotation_matrix(&m)))
}
