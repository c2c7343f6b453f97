//! Depth-to-normal translation.
//!
//! For planar depth `z(u, v)` with gradients `g_u = ∂z/∂u`, `g_v = ∂z/∂v` the
//! camera-frame normal is proportional to
//! `(fx·g_u, fy·g_v, -(z + (u - u0)·g_u + (v - v0)·g_v))`.
//! Gradients are central differences; any pixel whose 3×3 cross stencil
//! leaves the image or touches invalid (zero) depth gets the zero vector.

use rayon::prelude::*;

use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::geometry::Vector3;
use crate::grid::Grid;
use crate::scalar::Real;

/// Variant identifier written into dataset metadata.
pub const D2NT_VARIANT: &str = "d2nt-basic/central-difference";

pub type NormalMap<T> = Grid<Vector3<T>>;

pub fn depth_to_normals<T: Real>(depth: &Grid<T>, intr: &Intrinsics<T>) -> Result<NormalMap<T>> {
    if depth.width() != intr.width || depth.height() != intr.height {
        return Err(Error::DimensionMismatch {
            expected_w: intr.width,
            expected_h: intr.height,
            got_w: depth.width(),
            got_h: depth.height(),
        });
    }
    let (w, h) = (depth.width(), depth.height());
    let half = T::lit(0.5);
    let valid = |z: T| z > T::zero() && z.is_finite();
    let data: Vec<Vector3<T>> = (0..h)
        .into_par_iter()
        .flat_map_iter(|v| {
            (0..w).map(move |u| {
                if u == 0 || v == 0 || u + 1 == w || v + 1 == h {
                    return Vector3::zeros();
                }
                let z = *depth.get(u, v);
                let (l, r) = (*depth.get(u - 1, v), *depth.get(u + 1, v));
                let (t, b) = (*depth.get(u, v - 1), *depth.get(u, v + 1));
                if !(valid(z) && valid(l) && valid(r) && valid(t) && valid(b)) {
                    return Vector3::zeros();
                }
                let gu = (r - l) * half;
                let gv = (b - t) * half;
                let du = T::from_index(u) - intr.u0;
                let dv = T::from_index(v) - intr.v0;
                let n = Vector3::new(intr.fx * gu, intr.fy * gv, -(z + du * gu + dv * gv));
                n.try_normalize(T::zero()).unwrap_or_else(Vector3::zeros)
            })
        })
        .collect();
    Grid::from_vec(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_intr() -> Intrinsics<f64> {
        Intrinsics::new(554.26, 554.26, 32.0, 24.0, 64, 48).unwrap()
    }

    #[test]
    fn fronto_parallel_plane() {
        let intr = small_intr();
        let n = depth_to_normals(&Grid::new(64, 48, 1.0), &intr).unwrap();
        for (u, v, x) in n.iter_pixels() {
            if u == 0 || v == 0 || u == 63 || v == 47 {
                assert!(x.is_zero());
            } else {
                assert_eq!(*x, Vector3::new(0.0, 0.0, -1.0));
            }
        }
    }

    #[test]
    fn linear_ramp_at_principal_point() {
        let intr = small_intr();
        let depth = Grid::from_fn(64, 48, |u, _| 1.0 + 0.001 * (u as f64 - 32.0));
        let n = *depth_to_normals(&depth, &intr).unwrap().get(32, 24);
        // (0.55426, 0, -1) normalized
        let k = (0.55426f64.powi(2) + 1.0).sqrt();
        let expect = Vector3::new(0.55426 / k, 0.0, -1.0 / k);
        assert!((n - expect).norm() < 1e-12);
        assert!((n.x - 0.48478).abs() < 1e-4 && (n.z + 0.87464).abs() < 1e-4);
    }

    #[test]
    fn invalid_depth_support() {
        let intr = small_intr();
        assert!(depth_to_normals(&Grid::new(64, 48, 0.0), &intr)
            .unwrap()
            .as_slice()
            .iter()
            .all(|n| n.is_zero()));
        let mut depth = Grid::new(64, 48, 1.0);
        depth.set(10, 10, 0.0);
        let n = depth_to_normals(&depth, &intr).unwrap();
        for (u, v) in [(10, 10), (9, 10), (11, 10), (10, 9), (10, 11)] {
            assert!(n.get(u, v).is_zero());
        }
        assert!(!n.get(9, 9).is_zero());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            depth_to_normals(&Grid::new(10, 10, 1.0), &small_intr()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_precision() {
        let intr = small_intr().cast::<f32>();
        let n = depth_to_normals(&Grid::new(64, 48, 2.0f32), &intr).unwrap();
        assert_eq!(*n.get(5, 5), Vector3::new(0.0, 0.0, -1.0));
    }
}
