use super::Vector3;
use crate::scalar::Real;

/// Object id reported for hits on the analytic ground plane.
pub const GROUND_ID: u32 = u16::MAX as u32;
/// Triangle index reported for hits on the analytic ground plane.
pub const GROUND_TRIANGLE: usize = usize::MAX;

/// Determinant cutoff below which a ray is treated as parallel to a triangle.
pub const DET_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray<T> {
    pub origin: Vector3<T>,
    /// Unit length.
    pub direction: Vector3<T>,
}

impl<T: Real> Ray<T> {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vector3<T>, direction: Vector3<T>) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn at(&self, t: T) -> Vector3<T> {
        self.origin + self.direction * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit<T> {
    pub t: T,
    pub point: Vector3<T>,
    /// Unit geometric normal, facing against the ray.
    pub face_normal: Vector3<T>,
    pub object_id: u32,
    pub triangle_index: usize,
}

impl<T: Real> RayHit<T> {
    /// Total order used to pick among hits: distance, then object, then triangle.
    pub fn precedes(&self, other: &Self) -> bool {
        (self.t, self.object_id, self.triangle_index)
            < (other.t, other.object_id, other.triangle_index)
    }

    pub fn is_ground(&self) -> bool {
        self.object_id == GROUND_ID
    }
}

/// Watertight ray/triangle test (Woop, Benthin & Wald 2013).
///
/// Returns the ray parameter of a hit with `0 < t <= t_max`. Hits on shared
/// edges and vertices are reported for every adjacent triangle, so rays never
/// slip through a closed mesh.
pub fn intersect_triangle<T: Real>(ray: &Ray<T>, tri: &[Vector3<T>; 3], t_max: T) -> Option<T> {
    let d = ray.direction;
    let kz = if d.x.abs() > d.y.abs() {
        if d.x.abs() > d.z.abs() {
            0
        } else {
            2
        }
    } else if d.y.abs() > d.z.abs() {
        1
    } else {
        2
    };
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if d[kz] < T::zero() {
        std::mem::swap(&mut kx, &mut ky);
    }
    let sx = d[kx] / d[kz];
    let sy = d[ky] / d[kz];
    let sz = T::one() / d[kz];

    let a = tri[0] - ray.origin;
    let b = tri[1] - ray.origin;
    let c = tri[2] - ray.origin;
    let (ax, ay) = (a[kx] - sx * a[kz], a[ky] - sy * a[kz]);
    let (bx, by) = (b[kx] - sx * b[kz], b[ky] - sy * b[kz]);
    let (cx, cy) = (c[kx] - sx * c[kz], c[ky] - sy * c[kz]);

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    let zero = T::zero();
    if (u < zero || v < zero || w < zero) && (u > zero || v > zero || w > zero) {
        return None;
    }
    let det = u + v + w;
    if det.abs() < T::lit(DET_EPSILON) {
        return None;
    }
    let t_scaled = u * (sz * a[kz]) + v * (sz * b[kz]) + w * (sz * c[kz]);
    let t = t_scaled / det;
    if t > zero && t <= t_max {
        Some(t)
    } else {
        None
    }
}

/// Unit normal of triangle `abc` by its winding, `None` if degenerate.
pub fn triangle_normal<T: Real>(tri: &[Vector3<T>; 3]) -> Option<Vector3<T>> {
    (tri[1] - tri[0])
        .cross(&(tri[2] - tri[0]))
        .try_normalize(T::zero())
}

/// `n` flipped if needed so that `n · direction < 0`.
pub fn face_toward<T: Real>(n: Vector3<T>, direction: &Vector3<T>) -> Vector3<T> {
    if n.dot(direction) > T::zero() {
        -n
    } else {
        n
    }
}
