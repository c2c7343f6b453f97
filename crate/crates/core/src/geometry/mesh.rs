use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Pose, Vector3};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Indexed triangle mesh. Triangles wind counter-clockwise seen from outside.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vector3<T>>,
    triangles: Vec<[usize; 3]>,
    pub object_id: u32,
}

impl<T: Real> TriangleMesh<T> {
    /// Validates indices and drops zero-area triangles.
    pub fn new(
        vertices: Vec<Vector3<T>>,
        triangles: Vec<[usize; 3]>,
        object_id: u32,
    ) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {v:?}")));
        }
        let n = vertices.len();
        let mut kept = Vec::with_capacity(triangles.len());
        for (i, t) in triangles.into_iter().enumerate() {
            if t.iter().any(|&k| k >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} indexes past {n} vertices: {t:?}"
                )));
            }
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if (b - a).cross(&(c - a)).norm_squared() > T::zero() {
                kept.push(t);
            }
        }
        Ok(Self {
            vertices,
            triangles: kept,
            object_id,
        })
    }

    pub fn vertices(&self) -> &[Vector3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, i: usize) -> [Vector3<T>; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
        ]
    }

    pub fn surface_area(&self) -> T {
        let half = T::lit(0.5);
        (0..self.triangles.len()).fold(T::zero(), |acc, i| {
            let [a, b, c] = self.triangle(i);
            acc + (b - a).cross(&(c - a)).norm() * half
        })
    }

    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_counts().len() as i64 + self.triangles.len() as i64
    }

    /// Every edge shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        self.edge_counts().values().all(|&c| c == 2)
    }

    pub fn transformed(&self, pose: &Pose<T>) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| pose.transform_point(v))
                .collect(),
            triangles: self.triangles.clone(),
            object_id: self.object_id,
        }
    }

    /// Loads vertices and triangular faces from Wavefront OBJ text. Other
    /// records are ignored; faces with more than three corners are rejected.
    pub fn parse_obj(text: &str, object_id: u32) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| {
                            Error::malformed("obj", format!("line {}: {e}", lineno + 1))
                        })?;
                    if c.len() != 3 {
                        return Err(Error::malformed(
                            "obj",
                            format!("line {}: short vertex", lineno + 1),
                        ));
                    }
                    vertices.push(Vector3::new(T::lit(c[0]), T::lit(c[1]), T::lit(c[2])));
                }
                Some("f") => {
                    let corners: Vec<&str> = it.collect();
                    if corners.len() != 3 {
                        return Err(Error::malformed(
                            "obj",
                            format!("line {}: face with {} corners", lineno + 1, corners.len()),
                        ));
                    }
                    let mut tri = [0usize; 3];
                    for (k, corner) in corners.iter().enumerate() {
                        let idx: i64 =
                            corner
                                .split('/')
                                .next()
                                .unwrap_or("")
                                .parse()
                                .map_err(|e| {
                                    Error::malformed("obj", format!("line {}: {e}", lineno + 1))
                                })?;
                        let resolved = match idx {
                            i if i > 0 => i - 1,
                            i if i < 0 => vertices.len() as i64 + i,
                            _ => -1,
                        };
                        if resolved < 0 {
                            return Err(Error::malformed(
                                "obj",
                                format!("line {}: bad index {idx}", lineno + 1),
                            ));
                        }
                        tri[k] = resolved as usize;
                    }
                    triangles.push(tri);
                }
                _ => {}
            }
        }
        Self::new(vertices, triangles, object_id)
    }

    pub fn load_obj(path: &Path, object_id: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_obj(&text, object_id)
    }
}

/// Primitive shapes, centered on the local origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Primitive {
    Sphere {
        radius: f64,
    },
    /// Axis along local +Z, spanning `[-height/2, height/2]`.
    Cylinder {
        radius: f64,
        height: f64,
    },
    /// Full edge lengths along X, Y, Z.
    Box {
        size: [f64; 3],
    },
    /// Rectangle in the local XY plane facing +Z.
    Plane {
        size: [f64; 2],
    },
}

pub const MIN_TESSELLATION: usize = 3;

/// Generates a primitive mesh. `tessellation` is the number of segments
/// around curved primitives and is ignored for boxes and planes.
pub fn make_primitive<T: Real>(
    kind: Primitive,
    tessellation: usize,
    object_id: u32,
) -> Result<TriangleMesh<T>> {
    let positive = |name: &str, x: f64| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidDimension(format!("{name} = {x}")))
        }
    };
    let curved = |tess: usize| {
        if tess < MIN_TESSELLATION {
            Err(Error::TessellationTooLow {
                got: tess,
                min: MIN_TESSELLATION,
            })
        } else {
            Ok(())
        }
    };
    let v = |x: f64, y: f64, z: f64| Vector3::new(T::lit(x), T::lit(y), T::lit(z));
    let tau = std::f64::consts::TAU;

    let (vertices, triangles) = match kind {
        Primitive::Sphere { radius } => {
            positive("radius", radius)?;
            curved(tessellation)?;
            let seg = tessellation;
            let rings = (tessellation / 2).max(2);
            let mut vs = vec![v(0.0, 0.0, radius)];
            for i in 1..rings {
                let theta = std::f64::consts::PI * i as f64 / rings as f64;
                let (st, ct) = theta.sin_cos();
                for j in 0..seg {
                    let phi = tau * j as f64 / seg as f64;
                    vs.push(v(
                        radius * st * phi.cos(),
                        radius * st * phi.sin(),
                        radius * ct,
                    ));
                }
            }
            let south = vs.len();
            vs.push(v(0.0, 0.0, -radius));
            let ring = |i: usize, j: usize| 1 + (i - 1) * seg + j % seg;
            let mut ts = Vec::new();
            for j in 0..seg {
                ts.push([0, ring(1, j), ring(1, j + 1)]);
            }
            for i in 1..rings - 1 {
                for j in 0..seg {
                    let (a, b) = (ring(i, j), ring(i, j + 1));
                    let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
                    ts.push([a, c, d]);
                    ts.push([a, d, b]);
                }
            }
            for j in 0..seg {
                ts.push([south, ring(rings - 1, j + 1), ring(rings - 1, j)]);
            }
            (vs, ts)
        }
        Primitive::Cylinder { radius, height } => {
            positive("radius", radius)?;
            positive("height", height)?;
            curved(tessellation)?;
            let seg = tessellation;
            let h = height / 2.0;
            let mut vs = Vec::with_capacity(2 * seg + 2);
            for j in 0..seg {
                let phi = tau * j as f64 / seg as f64;
                let (x, y) = (radius * phi.cos(), radius * phi.sin());
                vs.push(v(x, y, -h));
                vs.push(v(x, y, h));
            }
            let (bottom, top) = (2 * seg, 2 * seg + 1);
            vs.push(v(0.0, 0.0, -h));
            vs.push(v(0.0, 0.0, h));
            let mut ts = Vec::with_capacity(4 * seg);
            for j in 0..seg {
                let k = (j + 1) % seg;
                let (b0, t0, b1, t1) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                ts.push([b0, b1, t1]);
                ts.push([b0, t1, t0]);
                ts.push([top, t0, t1]);
                ts.push([bottom, b1, b0]);
            }
            (vs, ts)
        }
        Primitive::Box { size } => {
            for (name, s) in ["size.x", "size.y", "size.z"].iter().zip(size) {
                positive(name, s)?;
            }
            let [hx, hy, hz] = size.map(|s| s / 2.0);
            let vs = (0..8)
                .map(|i| {
                    v(
                        if i & 1 == 0 { -hx } else { hx },
                        if i & 2 == 0 { -hy } else { hy },
                        if i & 4 == 0 { -hz } else { hz },
                    )
                })
                .collect();
            let ts = vec![
                [0, 2, 3],
                [0, 3, 1], // -z
                [4, 5, 7],
                [4, 7, 6], // +z
                [0, 1, 5],
                [0, 5, 4], // -y
                [2, 6, 7],
                [2, 7, 3], // +y
                [0, 4, 6],
                [0, 6, 2], // -x
                [1, 3, 7],
                [1, 7, 5], // +x
            ];
            (vs, ts)
        }
        Primitive::Plane { size } => {
            positive("size.x", size[0])?;
            positive("size.y", size[1])?;
            let (hx, hy) = (size[0] / 2.0, size[1] / 2.0);
            let vs = vec![
                v(-hx, -hy, 0.0),
                v(hx, -hy, 0.0),
                v(hx, hy, 0.0),
                v(-hx, hy, 0.0),
            ];
            (vs, vec![[0, 1, 2], [0, 2, 3]])
        }
    };
    TriangleMesh::new(vertices, triangles, object_id)
}
