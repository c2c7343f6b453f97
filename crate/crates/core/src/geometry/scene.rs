use std::collections::BTreeSet;

use super::{
    face_toward, intersect_triangle, triangle_normal, Aabb, Bvh, OrientedBox, Pose, Ray, RayHit,
    TriangleMesh, Vector3, GROUND_ID, GROUND_TRIANGLE,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject<T> {
    /// Mesh in the object's local frame.
    pub mesh: TriangleMesh<T>,
    pub pose: Pose<T>,
}

/// Static world: posed meshes plus an optional infinite ground plane at z = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T> {
    objects: Vec<SceneObject<T>>,
    ground_plane: bool,
}

impl<T: Real> Scene<T> {
    /// Object ids must be unique and in `1..GROUND_ID`; 0 marks background.
    pub fn new(objects: Vec<SceneObject<T>>, ground_plane: bool) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for o in &objects {
            let id = o.mesh.object_id;
            if id == 0 || id >= GROUND_ID || !ids.insert(id) {
                return Err(Error::InvalidObjectId(id));
            }
        }
        Ok(Self {
            objects,
            ground_plane,
        })
    }

    pub fn objects(&self) -> &[SceneObject<T>] {
        &self.objects
    }

    pub fn has_ground_plane(&self) -> bool {
        self.ground_plane
    }

    /// Applies `motion` to every object. The ground plane is unchanged, so
    /// `motion` should preserve z = 0 for a physically equivalent scene.
    pub fn transformed(&self, motion: &Pose<T>) -> Self {
        Self {
            objects: self
                .objects
                .iter()
                .map(|o| SceneObject {
                    mesh: o.mesh.clone(),
                    pose: motion.compose(&o.pose),
                })
                .collect(),
            ground_plane: self.ground_plane,
        }
    }
}

/// World-space triangle soup with a BVH, ready for ray and overlap queries.
#[derive(Clone, Debug)]
pub struct AcceleratedScene<T> {
    triangles: Vec<[Vector3<T>; 3]>,
    normals: Vec<Vector3<T>>,
    /// `(object_id, triangle index within its mesh)`.
    sources: Vec<(u32, usize)>,
    bvh: Option<Bvh<T>>,
    ground_plane: bool,
}

/// Builds the accelerated form of `scene`. Fails if it has no geometry at all.
pub fn build_bvh<T: Real>(scene: &Scene<T>) -> Result<AcceleratedScene<T>> {
    AcceleratedScene::build(scene)
}

impl<T: Real> AcceleratedScene<T> {
    pub fn build(scene: &Scene<T>) -> Result<Self> {
        let mut triangles = Vec::new();
        let mut normals = Vec::new();
        let mut sources = Vec::new();
        for obj in scene.objects() {
            let world = obj.mesh.transformed(&obj.pose);
            for i in 0..world.triangles().len() {
                let tri = world.triangle(i);
                // posing can collapse a sliver triangle in rounding; skip it like any degenerate one
                if let Some(n) = triangle_normal(&tri) {
                    triangles.push(tri);
                    normals.push(n);
                    sources.push((obj.mesh.object_id, i));
                }
            }
        }
        if triangles.is_empty() && !scene.has_ground_plane() {
            return Err(Error::EmptyScene);
        }
        let bounds: Vec<Aabb<T>> = triangles
            .iter()
            .map(|t| {
                let b = Aabb::from_points(t.iter());
                let scale = T::one() + b.min.max_abs_component().max(b.max.max_abs_component());
                b.padded(T::epsilon() * T::lit(16.0) * scale)
            })
            .collect();
        Ok(Self {
            bvh: Bvh::build(&bounds),
            triangles,
            normals,
            sources,
            ground_plane: scene.has_ground_plane(),
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// World-space triangle `i` with its `(object_id, mesh triangle index)`.
    pub fn triangle(&self, i: usize) -> ([Vector3<T>; 3], u32, usize) {
        (self.triangles[i], self.sources[i].0, self.sources[i].1)
    }

    pub fn has_ground_plane(&self) -> bool {
        self.ground_plane
    }

    pub fn contains_object(&self, object_id: u32) -> bool {
        self.sources.iter().any(|&(id, _)| id == object_id)
    }

    pub fn bvh(&self) -> Option<&Bvh<T>> {
        self.bvh.as_ref()
    }

    fn make_hit(&self, ray: &Ray<T>, i: usize, t: T) -> RayHit<T> {
        RayHit {
            t,
            point: ray.at(t),
            face_normal: face_toward(self.normals[i], &ray.direction),
            object_id: self.sources[i].0,
            triangle_index: self.sources[i].1,
        }
    }

    fn ground_hit(&self, ray: &Ray<T>, t_max: T) -> Option<RayHit<T>> {
        if !self.ground_plane || ray.direction.z == T::zero() {
            return None;
        }
        let t = -ray.origin.z / ray.direction.z;
        if t > T::zero() && t <= t_max {
            let mut point = ray.at(t);
            point.z = T::zero();
            Some(RayHit {
                t,
                point,
                face_normal: face_toward(Vector3::z_axis(), &ray.direction),
                object_id: GROUND_ID,
                triangle_index: GROUND_TRIANGLE,
            })
        } else {
            None
        }
    }

    /// Nearest hit with `0 < t`.
    pub fn raycast(&self, ray: &Ray<T>) -> Option<RayHit<T>> {
        self.raycast_max(ray, T::infinity())
    }

    /// Nearest hit with `0 < t <= t_max`. Equal distances resolve by
    /// [`RayHit::precedes`].
    pub fn raycast_max(&self, ray: &Ray<T>, t_max: T) -> Option<RayHit<T>> {
        let mut best: Option<RayHit<T>> = None;
        if let Some(bvh) = &self.bvh {
            bvh.traverse_ray(ray, t_max, |i, limit| {
                if let Some(t) = intersect_triangle(ray, &self.triangles[i], *limit) {
                    let hit = self.make_hit(ray, i, t);
                    if best.as_ref().is_none_or(|b| hit.precedes(b)) {
                        *limit = t;
                        best = Some(hit);
                    }
                }
            });
        }
        if let Some(g) = self.ground_hit(ray, t_max) {
            if best.as_ref().is_none_or(|b| g.precedes(b)) {
                best = Some(g);
            }
        }
        best
    }

    /// Every hit within `(0, t_max]` on objects accepted by `keep`, nearest first.
    pub fn hits_along(&self, ray: &Ray<T>, t_max: T, keep: impl Fn(u32) -> bool) -> Vec<RayHit<T>> {
        let mut hits = Vec::new();
        if let Some(bvh) = &self.bvh {
            bvh.traverse_ray(ray, t_max, |i, limit| {
                if keep(self.sources[i].0) {
                    if let Some(t) = intersect_triangle(ray, &self.triangles[i], *limit) {
                        hits.push(self.make_hit(ray, i, t));
                    }
                }
            });
        }
        if keep(GROUND_ID) {
            hits.extend(self.ground_hit(ray, t_max));
        }
        hits.sort_by(|a, b| {
            a.t.partial_cmp(&b.t)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then((a.object_id, a.triangle_index).cmp(&(b.object_id, b.triangle_index)))
        });
        hits
    }

    /// Ids of objects (ground included) whose surface overlaps `b`.
    pub fn objects_overlapping(&self, b: &OrientedBox<T>) -> BTreeSet<u32> {
        let mut ids = BTreeSet::new();
        if self.ground_plane && b.min_z() < T::zero() {
            ids.insert(GROUND_ID);
        }
        if let Some(bvh) = &self.bvh {
            bvh.query_aabb(&b.world_aabb(), |i| {
                let id = self.sources[i].0;
                if !ids.contains(&id) && b.intersects_triangle(&self.triangles[i]) {
                    ids.insert(id);
                }
            });
        }
        ids
    }

    /// Point-in-solid test for a closed mesh by ray crossing parity.
    pub fn object_contains(&self, object_id: u32, p: &Vector3<T>) -> bool {
        // an irrational-ish direction avoids grazing shared edges of axis-aligned meshes
        let dir = Vector3::new(T::lit(0.5773), T::lit(0.5774), T::lit(0.5773503));
        let ray = Ray::new(*p, dir);
        let mut hits = self.hits_along(&ray, T::infinity(), |id| id == object_id);
        hits.dedup_by(|a, b| (a.t - b.t).abs() <= T::epsilon() * T::lit(64.0) * (T::one() + b.t));
        hits.len() % 2 == 1
    }
}
