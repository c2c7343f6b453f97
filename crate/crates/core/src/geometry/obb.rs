use super::{Aabb, Pose, Vector3};
use crate::scalar::Real;

/// Box with arbitrary orientation: `pose` places its center, `half_extents` are
/// along the box's local axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox<T> {
    pub pose: Pose<T>,
    pub half_extents: Vector3<T>,
}

impl<T: Real> OrientedBox<T> {
    pub fn new(pose: Pose<T>, half_extents: Vector3<T>) -> Self {
        Self { pose, half_extents }
    }

    pub fn corners(&self) -> [Vector3<T>; 8] {
        let h = self.half_extents;
        std::array::from_fn(|i| {
            let local = Vector3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            );
            self.pose.transform_point(&local)
        })
    }

    pub fn world_aabb(&self) -> Aabb<T> {
        Aabb::from_points(self.corners().iter())
    }

    /// Same box shrunk by `margin` on every face (clamped at zero).
    pub fn shrunk(&self, margin: T) -> Self {
        let h = self.half_extents;
        let s = |x: T| (x - margin).max(T::zero());
        Self::new(self.pose, Vector3::new(s(h.x), s(h.y), s(h.z)))
    }

    pub fn contains(&self, p: &Vector3<T>) -> bool {
        let l = self.pose.inverse_transform_point(p);
        let h = self.half_extents;
        l.x.abs() <= h.x && l.y.abs() <= h.y && l.z.abs() <= h.z
    }

    pub fn min_z(&self) -> T {
        self.corners().iter().fold(T::infinity(), |m, c| m.min(c.z))
    }

    /// Separating-axis overlap test against a world-space triangle.
    pub fn intersects_triangle(&self, tri: &[Vector3<T>; 3]) -> bool {
        let v = tri.map(|p| self.pose.inverse_transform_point(&p));
        triangle_overlaps_centered_box(&v, &self.half_extents)
    }
}

/// Akenine-Möller triangle/box overlap for a box centered on the origin.
pub fn triangle_overlaps_centered_box<T: Real>(v: &[Vector3<T>; 3], h: &Vector3<T>) -> bool {
    let separated_on = |axis: Vector3<T>| {
        let p = [v[0].dot(&axis), v[1].dot(&axis), v[2].dot(&axis)];
        let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
        let lo = p[0].min(p[1]).min(p[2]);
        let hi = p[0].max(p[1]).max(p[2]);
        lo > r || hi < -r
    };
    let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let axes = [Vector3::x_axis(), Vector3::y_axis(), Vector3::z_axis()];
    for e in &edges {
        for f in &axes {
            let a = e.cross(f);
            if a.norm_squared() > T::zero() && separated_on(a) {
                return false;
            }
        }
    }
    for f in axes {
        if separated_on(f) {
            return false;
        }
    }
    let n = edges[0].cross(&edges[1]);
    !(n.norm_squared() > T::zero() && separated_on(n))
}
