//! Grasp-quality maps: three predictors, pixel selection and evaluation
//! against simulated labels.

use serde::{Deserialize, Serialize};

use crate::d2nt::NormalMap;
use crate::error::{Error, Result};
use crate::grasp::{LABEL_INDETERMINATE, LABEL_SUCCESS};
use crate::grid::Grid;
use crate::render::ViewSample;

/// Optimal-region threshold: pixels within 15% of the best possible score.
pub const DEFAULT_THRESHOLD: f64 = 0.85;
/// Mask-boundary distance (pixels) at which the heuristic stops penalizing edges.
pub const HEURISTIC_EDGE_DISTANCE: f64 = 10.0;

/// Per-pixel grasp success score in [0, 1], zero outside the target.
#[derive(Clone, Debug, PartialEq)]
pub struct GraspQualityMap {
    q: Grid<f64>,
}

impl GraspQualityMap {
    /// Validates the range and zeroes everything outside `mask`.
    pub fn new(q: Grid<f64>, mask: &Grid<bool>) -> Result<Self> {
        q.check_shape(mask)?;
        if let Some(bad) = q.as_slice().iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::malformed(
                "quality map",
                format!("value {bad} outside [0, 1]"),
            ));
        }
        let data = q
            .as_slice()
            .iter()
            .zip(mask.as_slice())
            .map(|(&x, &m)| if m { x } else { 0.0 })
            .collect();
        Ok(Self {
            q: Grid::from_vec(q.width(), q.height(), data)?,
        })
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.q
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        *self.q.get(u, v)
    }

    pub fn into_grid(self) -> Grid<f64> {
        self.q
    }

    /// Zeroes the given pixels.
    pub fn suppress(&mut self, keep: &Grid<bool>) -> Result<()> {
        self.q.check_shape(keep)?;
        for (x, &k) in self.q.as_mut_slice().iter_mut().zip(keep.as_slice()) {
            if !k {
                *x = 0.0;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predictor {
    /// Favors surfaces facing the camera away from the mask boundary.
    Heuristic,
    /// Ground-truth labels: 1 → 1.0, 0 and −1 → 0.0.
    Oracle(Grid<i8>),
    /// Externally computed map, e.g. a learned model's export.
    Heatmap(Grid<f64>),
}

/// Euclidean distance in pixels from each `true` pixel to the nearest `false`
/// pixel, treating everything beyond the image border as `false`. Zero on
/// `false` pixels.
pub fn distance_to_boundary(mask: &Grid<bool>) -> Grid<f64> {
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    let inf = ((pw * pw + ph * ph) as f64) * 4.0;
    let mut f = vec![0.0f64; pw * ph];
    for (u, v, &m) in mask.iter_pixels() {
        if m {
            f[(v + 1) * pw + u + 1] = inf;
        }
    }
    let mut line = Vec::new();
    let mut out = Vec::new();
    for x in 0..pw {
        line.clear();
        line.extend((0..ph).map(|y| f[y * pw + x]));
        squared_edt_1d(&line, &mut out);
        for y in 0..ph {
            f[y * pw + x] = out[y];
        }
    }
    for y in 0..ph {
        line.clear();
        line.extend_from_slice(&f[y * pw..(y + 1) * pw]);
        squared_edt_1d(&line, &mut out);
        f[y * pw..(y + 1) * pw].copy_from_slice(&out);
    }
    Grid::from_fn(w, h, |u, v| f[(v + 1) * pw + u + 1].sqrt())
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn squared_edt_1d(f: &[f64], d: &mut Vec<f64>) {
    let n = f.len();
    d.clear();
    d.resize(n, 0.0);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let inter = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for q in 1..n {
        let mut s = inter(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = inter(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *out = dq * dq + f[v[k]];
    }
}

/// Heuristic score: `clamp(−n_z, 0, 1) · min(1, d / 10)` with `n` the
/// depth-derived normal and `d` the distance to the mask boundary.
pub fn heuristic_quality(estimated_normals: &NormalMap<f64>, mask: &Grid<bool>) -> Grid<f64> {
    let dist = distance_to_boundary(mask);
    Grid::from_fn(mask.width(), mask.height(), |u, v| {
        if !*mask.get(u, v) {
            return 0.0;
        }
        let facing = (-estimated_normals.get(u, v).z).clamp(0.0, 1.0);
        facing * (dist.get(u, v) / HEURISTIC_EDGE_DISTANCE).min(1.0)
    })
}

/// Scores every pixel of `view` for grasping the object under `mask`.
///
/// The map is zero outside the mask and wherever the view has no valid depth
/// and normal. `estimated_normals` (depth-derived, same size) feeds the
/// heuristic only.
pub fn predict_quality(
    view: &ViewSample,
    mask: &Grid<bool>,
    estimated_normals: &NormalMap<f64>,
    predictor: &Predictor,
) -> Result<GraspQualityMap> {
    view.depth.check_shape(mask)?;
    let raw = match predictor {
        Predictor::Heuristic => {
            view.depth.check_shape(estimated_normals)?;
            heuristic_quality(estimated_normals, mask)
        }
        Predictor::Oracle(labels) => {
            view.depth.check_shape(labels)?;
            labels.map(|&l| if l == LABEL_SUCCESS { 1.0 } else { 0.0 })
        }
        Predictor::Heatmap(q) => {
            view.depth.check_shape(q)?;
            q.clone()
        }
    };
    let gate = Grid::from_fn(view.width(), view.height(), |u, v| {
        *mask.get(u, v) && *view.depth.get(u, v) > 0.0 && !view.normals.get(u, v).is_zero()
    });
    GraspQualityMap::new(raw, &gate)
}

/// Chosen grasp pixel and the near-optimal region around the maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub u: usize,
    pub v: usize,
    pub q_value: f64,
    /// Masked pixels with `q ≥ threshold`, row-major.
    pub region: Vec<(usize, usize)>,
}

/// Arg-max of `q` over `mask`; ties go to the first pixel in row-major order.
pub fn select_grasp_pixel(
    q: &GraspQualityMap,
    mask: &Grid<bool>,
    threshold: f64,
) -> Result<Selection> {
    q.grid().check_shape(mask)?;
    let mut best: Option<(usize, usize, f64)> = None;
    let mut region = Vec::new();
    for (u, v, &m) in mask.iter_pixels() {
        if !m {
            continue;
        }
        let x = q.get(u, v);
        if best.is_none_or(|(_, _, b)| x > b) {
            best = Some((u, v, x));
        }
        if x >= threshold {
            region.push((u, v));
        }
    }
    let (u, v, q_value) = best.ok_or(Error::EmptyMask)?;
    if q_value <= 0.0 {
        return Err(Error::NoViablePixel);
    }
    Ok(Selection {
        u,
        v,
        q_value,
        region,
    })
}

/// Confusion counts over pixels labeled 0 or 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub iou: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalMetrics {
    /// Metrics from raw counts. A ratio with an empty denominator is 1.
    pub fn from_counts(threshold: f64, tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self {
            threshold,
            tp,
            fp,
            fn_,
            tn,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            iou: ratio(tp, tp + fp + fn_),
        }
    }

    /// Sum of counts, metrics recomputed from the totals.
    pub fn pooled<'a>(threshold: f64, items: impl IntoIterator<Item = &'a EvalMetrics>) -> Self {
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for m in items {
            tp += m.tp;
            fp += m.fp;
            fn_ += m.fn_;
            tn += m.tn;
        }
        Self::from_counts(threshold, tp, fp, fn_, tn)
    }

    pub fn labeled(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Thresholds `q` (positive when `q ≥ threshold`) and compares against the
/// labels, ignoring −1 pixels.
pub fn evaluate(q: &GraspQualityMap, labels: &Grid<i8>, threshold: f64) -> Result<EvalMetrics> {
    q.grid().check_shape(labels)?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&x, &l) in q.grid().as_slice().iter().zip(labels.as_slice()) {
        if l == LABEL_INDETERMINATE {
            continue;
        }
        match (x >= threshold, l == LABEL_SUCCESS) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalMetrics::from_counts(threshold, tp, fp, fn_, tn))
}
