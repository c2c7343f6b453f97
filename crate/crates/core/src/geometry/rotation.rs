use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Vector3;
use crate::scalar::Real;

/// 3×3 matrix stored by rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix3<T> {
    pub rows: [[T; 3]; 3],
}

impl<T: Real> Matrix3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rows: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn from_columns(c0: Vector3<T>, c1: Vector3<T>, c2: Vector3<T>) -> Self {
        Self {
            rows: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn column(&self, j: usize) -> Vector3<T> {
        Vector3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Self {
        let r = &self.rows;
        Self {
            rows: [
                [r[0][0], r[1][0], r[2][0]],
                [r[0][1], r[1][1], r[2][1]],
                [r[0][2], r[1][2], r[2][2]],
            ],
        }
    }

    pub fn mul_vec(&self, v: &Vector3<T>) -> Vector3<T> {
        let r = &self.rows;
        Vector3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.rows[i][j] - other.rows[i][j]).abs());
            }
        }
        m
    }
}

impl<T: Real> Mul for Matrix3<T> {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        let mut rows = [[T::zero(); 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).fold(T::zero(), |acc, k| acc + self.rows[i][k] * o.rows[k][j]);
            }
        }
        Self { rows }
    }
}

/// Rotation as a unit quaternion `w + xi + yj + zk`.
///
/// Serialized as `[w, x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 4]", into = "[T; 4]")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct UnitQuaternion<T> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Real> From<[T; 4]> for UnitQuaternion<T> {
    fn from(q: [T; 4]) -> Self {
        Self::from_wxyz(q[0], q[1], q[2], q[3])
    }
}

impl<T: Real> From<UnitQuaternion<T>> for [T; 4] {
    fn from(q: UnitQuaternion<T>) -> Self {
        q.wxyz()
    }
}

impl<T: Real> Default for UnitQuaternion<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Normalizes the given components. A zero quaternion becomes the identity.
    pub fn from_wxyz(w: T, x: T, y: T, z: T) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n == T::zero() || !n.is_finite() {
            return Self::identity();
        }
        Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        }
    }

    pub fn wxyz(&self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn w(&self) -> T {
        self.w
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        let half = angle / T::lit(2.0);
        let a = axis.normalize() * half.sin();
        Self::from_wxyz(half.cos(), a.x, a.y, a.z)
    }

    /// Intrinsic Z-Y-X rotation `Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn from_euler_zyx(yaw: T, pitch: T, roll: T) -> Self {
        let two = T::lit(2.0);
        let (sy, cy) = (yaw / two).sin_cos();
        let (sp, cp) = (pitch / two).sin_cos();
        let (sr, cr) = (roll / two).sin_cos();
        Self::from_wxyz(
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        )
    }

    /// Inverse of [`from_euler_zyx`](Self::from_euler_zyx): returns `(yaw, pitch, roll)`.
    ///
    /// At pitch = ±π/2 the yaw is reported as zero and the roll absorbs it.
    pub fn to_euler_zyx(&self) -> (T, T, T) {
        let m = self.to_rotation_matrix().rows;
        let sp = (-m[2][0]).max(-T::one()).min(T::one());
        let pitch = sp.asin();
        if (T::one() - sp.abs()) < T::lit(1e-12) {
            // gimbal lock: with yaw fixed to zero, row 1 of Ry·Rx is (0, cos r, -sin r)
            let roll = (-m[1][2]).atan2(m[1][1]);
            return (T::zero(), pitch, roll);
        }
        let yaw = m[1][0].atan2(m[0][0]);
        let roll = m[2][1].atan2(m[2][2]);
        (yaw, pitch, roll)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        Matrix3 {
            rows: [
                [
                    one - two * (y * y + z * z),
                    two * (x * y - w * z),
                    two * (x * z + w * y),
                ],
                [
                    two * (x * y + w * z),
                    one - two * (x * x + z * z),
                    two * (y * z - w * x),
                ],
                [
                    two * (x * z - w * y),
                    two * (y * z + w * x),
                    one - two * (x * x + y * y),
                ],
            ],
        }
    }

    /// Shepperd's method; the input is assumed orthonormal.
    pub fn from_rotation_matrix(m: &Matrix3<T>) -> Self {
        let r = &m.rows;
        let one = T::one();
        let quarter = T::lit(0.25);
        let trace = r[0][0] + r[1][1] + r[2][2];
        if trace > T::zero() {
            let s = (trace + one).sqrt() * T::lit(2.0);
            Self::from_wxyz(
                quarter * s,
                (r[2][1] - r[1][2]) / s,
                (r[0][2] - r[2][0]) / s,
                (r[1][0] - r[0][1]) / s,
            )
        } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
            let s = (one + r[0][0] - r[1][1] - r[2][2]).sqrt() * T::lit(2.0);
            Self::from_wxyz(
                (r[2][1] - r[1][2]) / s,
                quarter * s,
                (r[0][1] + r[1][0]) / s,
                (r[0][2] + r[2][0]) / s,
            )
        } else if r[1][1] > r[2][2] {
            let s = (one + r[1][1] - r[0][0] - r[2][2]).sqrt() * T::lit(2.0);
            Self::from_wxyz(
                (r[0][2] - r[2][0]) / s,
                (r[0][1] + r[1][0]) / s,
                quarter * s,
                (r[1][2] + r[2][1]) / s,
            )
        } else {
            let s = (one + r[2][2] - r[0][0] - r[1][1]).sqrt() * T::lit(2.0);
            Self::from_wxyz(
                (r[1][0] - r[0][1]) / s,
                (r[0][2] + r[2][0]) / s,
                (r[1][2] + r[2][1]) / s,
                quarter * s,
            )
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn rotate(&self, v: &Vector3<T>) -> Vector3<T> {
        // v' = v + 2w(q × v) + 2 q × (q × v)
        let q = Vector3::new(self.x, self.y, self.z);
        let t = q.cross(v) * T::lit(2.0);
        *v + t * self.w + q.cross(&t)
    }

    /// Same rotation with `w ≥ 0`.
    pub fn canonical(&self) -> Self {
        if self.w < T::zero() {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            *self
        }
    }

    /// Distance between rotations, insensitive to the `q`/`-q` sign ambiguity.
    pub fn distance(&self, o: &Self) -> T {
        let a = self.wxyz();
        let b = o.wxyz();
        let mut plus = T::zero();
        let mut minus = T::zero();
        for i in 0..4 {
            plus = plus.max((a[i] + b[i]).abs());
            minus = minus.max((a[i] - b[i]).abs());
        }
        plus.min(minus)
    }

    pub fn cast<U: Real>(&self) -> UnitQuaternion<U> {
        UnitQuaternion::from_wxyz(
            U::lit(self.w.as_f64()),
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T: Real> Mul for UnitQuaternion<T> {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self::from_wxyz(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

/// Quaternion for intrinsic Z-Y-X Euler angles (radians).
pub fn quat_from_euler_zyx<T: Real>(yaw: T, pitch: T, roll: T) -> UnitQuaternion<T> {
    UnitQuaternion::from_euler_zyx(yaw, pitch, roll)
}
