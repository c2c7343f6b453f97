//! Bounding volume hierarchy over axis-aligned boxes.
//!
//! Built with a binned surface-area heuristic; leaves hold at most
//! [`MAX_LEAF_SIZE`] primitives.

use super::{Ray, Vector3};
use crate::scalar::Real;

pub const MAX_LEAF_SIZE: usize = 4;
const BIN_COUNT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<T> {
    pub min: Vector3<T>,
    pub max: Vector3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        let inf = T::infinity();
        Self {
            min: Vector3::new(inf, inf, inf),
            max: Vector3::new(-inf, -inf, -inf),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vector3<T>>) -> Self {
        points.into_iter().fold(Self::empty(), |b, p| b.grow(p))
    }

    pub fn grow(&self, p: &Vector3<T>) -> Self {
        Self {
            min: self.min.component_min(p),
            max: self.max.component_max(p),
        }
    }

    pub fn union(&self, o: &Self) -> Self {
        Self {
            min: self.min.component_min(&o.min),
            max: self.max.component_max(&o.max),
        }
    }

    /// Expanded by `pad` on every side.
    pub fn padded(&self, pad: T) -> Self {
        let p = Vector3::new(pad, pad, pad);
        Self {
            min: self.min - p,
            max: self.max + p,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn center(&self) -> Vector3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn surface_area(&self) -> T {
        if self.is_empty() {
            return T::zero();
        }
        let d = self.max - self.min;
        T::lit(2.0) * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn overlaps(&self, o: &Self) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }

    /// Parametric entry distance of `ray` into the box within `[0, t_max]`.
    pub fn ray_entry(&self, ray: &Ray<T>, inv_dir: &Vector3<T>, t_max: T) -> Option<T> {
        let mut near = T::zero();
        let mut far = t_max;
        for k in 0..3 {
            if ray.direction[k] == T::zero() {
                if ray.origin[k] < self.min[k] || ray.origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            let a = (self.min[k] - ray.origin[k]) * inv_dir[k];
            let b = (self.max[k] - ray.origin[k]) * inv_dir[k];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            near = near.max(lo);
            far = far.min(hi);
            if near > far {
                return None;
            }
        }
        Some(near)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node<T> {
    bounds: Aabb<T>,
    /// Leaf: first entry in `order`. Interior: index of the second child (the
    /// first child follows its parent directly).
    offset: usize,
    /// Number of primitives for leaves, zero for interior nodes.
    count: usize,
}

#[derive(Clone, Debug)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    order: Vec<usize>,
}

struct BuildItem<T> {
    bounds: Aabb<T>,
    centroid: Vector3<T>,
    index: usize,
}

impl<T: Real> Bvh<T> {
    /// Builds a hierarchy over primitive bounds. Returns `None` when `bounds` is empty.
    pub fn build(bounds: &[Aabb<T>]) -> Option<Self> {
        if bounds.is_empty() {
            return None;
        }
        let mut items: Vec<BuildItem<T>> = bounds
            .iter()
            .enumerate()
            .map(|(index, b)| BuildItem {
                bounds: *b,
                centroid: b.center(),
                index,
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * bounds.len() / MAX_LEAF_SIZE + 1),
            order: Vec::with_capacity(bounds.len()),
        };
        bvh.build_node(&mut items);
        Some(bvh)
    }

    fn build_node(&mut self, items: &mut [BuildItem<T>]) -> usize {
        let bounds = items
            .iter()
            .fold(Aabb::empty(), |b, it| b.union(&it.bounds));
        let id = self.nodes.len();
        if items.len() <= MAX_LEAF_SIZE {
            self.nodes.push(Node {
                bounds,
                offset: self.order.len(),
                count: items.len(),
            });
            self.order.extend(items.iter().map(|it| it.index));
            return id;
        }
        self.nodes.push(Node {
            bounds,
            offset: 0,
            count: 0,
        });
        let mid = Self::split(items);
        let (left, right) = items.split_at_mut(mid);
        self.build_node(left);
        let second = self.build_node(right);
        self.nodes[id].offset = second;
        id
    }

    /// Partitions `items` in place and returns the split position (never 0 or len).
    fn split(items: &mut [BuildItem<T>]) -> usize {
        let cb = items
            .iter()
            .fold(Aabb::empty(), |b, it| b.grow(&it.centroid));
        let extent = cb.max - cb.min;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let n = items.len();
        let median = |items: &mut [BuildItem<T>]| {
            items.sort_by(|a, b| {
                a.centroid[axis]
                    .partial_cmp(&b.centroid[axis])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.index.cmp(&b.index))
            });
            n / 2
        };
        if extent[axis] <= T::zero() {
            return median(items);
        }

        let lo = cb.min[axis];
        let scale = T::from_index(BIN_COUNT) / extent[axis];
        let bin_of = |c: T| {
            ((c - lo) * scale)
                .to_usize()
                .unwrap_or(0)
                .min(BIN_COUNT - 1)
        };
        let mut bins = [(Aabb::<T>::empty(), 0usize); BIN_COUNT];
        for it in items.iter() {
            let b = &mut bins[bin_of(it.centroid[axis])];
            b.0 = b.0.union(&it.bounds);
            b.1 += 1;
        }
        let mut best = (T::infinity(), 0usize);
        for cut in 1..BIN_COUNT {
            let (mut lb, mut lc) = (Aabb::empty(), 0);
            for b in &bins[..cut] {
                lb = lb.union(&b.0);
                lc += b.1;
            }
            let (mut rb, mut rc) = (Aabb::empty(), 0);
            for b in &bins[cut..] {
                rb = rb.union(&b.0);
                rc += b.1;
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost =
                lb.surface_area() * T::from_index(lc) + rb.surface_area() * T::from_index(rc);
            if cost < best.0 {
                best = (cost, cut);
            }
        }
        if best.1 == 0 {
            return median(items);
        }
        let mut left = 0;
        for i in 0..n {
            if bin_of(items[i].centroid[axis]) < best.1 {
                items.swap(i, left);
                left += 1;
            }
        }
        if left == 0 || left == n {
            median(items)
        } else {
            left
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    pub fn max_leaf_size(&self) -> usize {
        self.nodes.iter().map(|n| n.count).max().unwrap_or(0)
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes[0].bounds
    }

    /// Visits primitives whose boxes the ray enters before the current limit.
    ///
    /// `visit(index, &mut limit)` may shrink `limit`; subtrees entered beyond
    /// it are skipped. Nodes entered exactly at the limit are still visited.
    pub fn traverse_ray(&self, ray: &Ray<T>, t_max: T, mut visit: impl FnMut(usize, &mut T)) {
        let inv = Vector3::new(
            T::one() / ray.direction.x,
            T::one() / ray.direction.y,
            T::one() / ray.direction.z,
        );
        let mut limit = t_max;
        if self.nodes[0].bounds.ray_entry(ray, &inv, limit).is_none() {
            return;
        }
        let mut stack: Vec<usize> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.count > 0 {
                for &prim in &self.order[node.offset..node.offset + node.count] {
                    visit(prim, &mut limit);
                }
                continue;
            }
            let (a, b) = (id + 1, node.offset);
            let ta = self.nodes[a].bounds.ray_entry(ray, &inv, limit);
            let tb = self.nodes[b].bounds.ray_entry(ray, &inv, limit);
            match (ta, tb) {
                (Some(x), Some(y)) => {
                    // nearer child on top of the stack
                    if x <= y {
                        stack.push(b);
                        stack.push(a);
                    } else {
                        stack.push(a);
                        stack.push(b);
                    }
                }
                (Some(_), None) => stack.push(a),
                (None, Some(_)) => stack.push(b),
                (None, None) => {}
            }
            // entries recorded above may be stale once `limit` shrinks; leaves re-check exactly
        }
    }

    /// Visits every primitive whose box overlaps `query`.
    pub fn query_aabb(&self, query: &Aabb<T>, mut visit: impl FnMut(usize)) {
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                for &prim in &self.order[node.offset..node.offset + node.count] {
                    visit(prim);
                }
            } else {
                stack.push(node.offset);
                stack.push(id + 1);
            }
        }
    }
}
