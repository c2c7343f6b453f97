//! Pinhole camera: projection, back-projection and the camera-grid sampler.
//!
//! Pixel `(u, v)` is the center of column `u`, row `v`; depth is planar
//! (distance along the optical axis, not along the viewing ray).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{look_at, Pose, Vector3};
use crate::scalar::Real;

/// Name recorded in manifests for the jitter generator.
pub const GRID_PRNG: &str = "ChaCha8Rng(rand_chacha-0.3)/seed_from_u64/rand-0.8-uniform-f64";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub u0: T,
    pub v0: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> Intrinsics<T> {
    pub fn new(fx: T, fy: T, u0: T, v0: T, width: usize, height: usize) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            u0,
            v0,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// 640×480 sensor with `fx = fy = 554.26`, principal point `(320, 240)`.
    pub fn gripper_camera() -> Self {
        Self {
            fx: T::lit(554.26),
            fy: T::lit(554.26),
            u0: T::lit(320.0),
            v0: T::lit(240.0),
            width: 640,
            height: 480,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidIntrinsics(m));
        if !(self.fx > T::zero() && self.fy > T::zero())
            || !self.fx.is_finite()
            || !self.fy.is_finite()
        {
            return bad(format!(
                "focal lengths must be positive: fx={}, fy={}",
                self.fx, self.fy
            ));
        }
        if self.width == 0 || self.height == 0 {
            return bad(format!("empty image {}x{}", self.width, self.height));
        }
        let in_range = |c: T, n: usize| c >= T::zero() && c < T::from_index(n);
        if !in_range(self.u0, self.width) || !in_range(self.v0, self.height) {
            return bad(format!(
                "principal point ({}, {}) outside the image",
                self.u0, self.v0
            ));
        }
        Ok(())
    }

    /// Same field of view at another resolution.
    pub fn rescaled(&self, width: usize, height: usize) -> Result<Self> {
        let sx = T::from_index(width) / T::from_index(self.width);
        let sy = T::from_index(height) / T::from_index(self.height);
        Self::new(
            self.fx * sx,
            self.fy * sy,
            self.u0 * sx,
            self.v0 * sy,
            width,
            height,
        )
    }

    /// Camera-frame direction through pixel `(u, v)`, scaled to unit depth.
    #[inline]
    pub fn pixel_direction(&self, u: T, v: T) -> Vector3<T> {
        Vector3::new((u - self.u0) / self.fx, (v - self.v0) / self.fy, T::one())
    }

    pub fn cast<U: Real>(&self) -> Intrinsics<U> {
        Intrinsics {
            fx: U::lit(self.fx.as_f64()),
            fy: U::lit(self.fy.as_f64()),
            u0: U::lit(self.u0.as_f64()),
            v0: U::lit(self.v0.as_f64()),
            width: self.width,
            height: self.height,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord<T> {
    /// Column.
    pub u: T,
    /// Row.
    pub v: T,
}

impl<T: Real> PixelCoord<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }
}

impl PixelCoord<f64> {
    pub fn from_index(u: usize, v: usize) -> Self {
        Self::new(u as f64, v as f64)
    }

    /// Integer pixel if both coordinates are whole and inside `w × h`.
    pub fn to_index(&self, w: usize, h: usize) -> Option<(usize, usize)> {
        let ok = |c: f64, n: usize| c >= 0.0 && c.fract() == 0.0 && (c as usize) < n;
        (ok(self.u, w) && ok(self.v, h)).then_some((self.u as usize, self.v as usize))
    }
}

/// Camera-frame point for pixel `p` at planar depth `z`:
/// `((u - u0) z / fx, (v - v0) z / fy, z)`.
pub fn back_project<T: Real>(p: PixelCoord<T>, z: T, intr: &Intrinsics<T>) -> Result<Vector3<T>> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::InvalidDepth(z.as_f64()));
    }
    Ok(Vector3::new(
        (p.u - intr.u0) * z / intr.fx,
        (p.v - intr.v0) * z / intr.fy,
        z,
    ))
}

/// Pixel and planar depth of a camera-frame point in front of the camera.
pub fn project<T: Real>(p_cam: Vector3<T>, intr: &Intrinsics<T>) -> Result<(PixelCoord<T>, T)> {
    if !(p_cam.z > T::zero()) {
        return Err(Error::BehindCamera(p_cam.z.as_f64()));
    }
    let u = intr.fx * p_cam.x / p_cam.z + intr.u0;
    let v = intr.fy * p_cam.y / p_cam.z + intr.v0;
    Ok((PixelCoord::new(u, v), p_cam.z))
}

/// Regular camera grid on the plane `y = y_fixed`, each camera aimed at the
/// target plus a uniformly drawn offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraGridSpec {
    pub x_count: usize,
    pub z_count: usize,
    pub x_range: [f64; 2],
    pub z_range: [f64; 2],
    pub y_fixed: f64,
    /// Offset range for the aim point along world X and Y.
    pub jitter_xy: [f64; 2],
    /// Offset range for the aim point along world Z.
    pub jitter_z: [f64; 2],
    pub seed: u64,
}

impl Default for CameraGridSpec {
    /// The 100 × 10 grid over `[-0.5, 0.5]²` at `y = 0.5`.
    fn default() -> Self {
        Self {
            x_count: 100,
            z_count: 10,
            x_range: [-0.5, 0.5],
            z_range: [-0.5, 0.5],
            y_fixed: 0.5,
            jitter_xy: [-0.03, 0.03],
            jitter_z: [0.0, 0.09],
            seed: 42,
        }
    }
}

impl CameraGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.x_count == 0 || self.z_count == 0 {
            return Err(Error::Config(format!(
                "grid counts must be >= 1 (got {} x {})",
                self.x_count, self.z_count
            )));
        }
        for (name, r) in [
            ("x_range", self.x_range),
            ("z_range", self.z_range),
            ("jitter_xy", self.jitter_xy),
            ("jitter_z", self.jitter_z),
        ] {
            if !(r[0] <= r[1]) || !r[0].is_finite() || !r[1].is_finite() {
                return Err(Error::Config(format!(
                    "{name} must be an ordered finite range: {r:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x_count * self.z_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn axis_value(range: [f64; 2], count: usize, i: usize) -> f64 {
        if count == 1 {
            (range[0] + range[1]) / 2.0
        } else {
            range[0] + (range[1] - range[0]) * i as f64 / (count - 1) as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridView {
    pub x_index: usize,
    pub z_index: usize,
    pub pose: Pose<f64>,
    /// Aim point offset from the target, world axes.
    pub jitter: Vector3<f64>,
}

/// Samples `x_count · z_count` camera poses in row-major `(z_index, x_index)`
/// order. Positions depend only on the grid; the seed drives the aim jitter,
/// drawn as `(dx, dy, dz)` per view in that order.
pub fn sample_camera_grid(spec: &CameraGridSpec, target: Vector3<f64>) -> Result<Vec<GridView>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |r: [f64; 2]| {
        if r[0] == r[1] {
            r[0]
        } else {
            rng.gen_range(r[0]..=r[1])
        }
    };
    let mut views = Vec::with_capacity(spec.len());
    for zi in 0..spec.z_count {
        for xi in 0..spec.x_count {
            let eye = Vector3::new(
                CameraGridSpec::axis_value(spec.x_range, spec.x_count, xi),
                spec.y_fixed,
                CameraGridSpec::axis_value(spec.z_range, spec.z_count, zi),
            );
            let jitter = Vector3::new(
                draw(spec.jitter_xy),
                draw(spec.jitter_xy),
                draw(spec.jitter_z),
            );
            let pose = look_at(eye, target + jitter, Vector3::z_axis())?;
            views.push(GridView {
                x_index: xi,
                z_index: zi,
                pose,
                jitter,
            });
        }
    }
    Ok(views)
}
