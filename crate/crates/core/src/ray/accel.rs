//! Ray/triangle intersection and a bounding volume hierarchy over triangles.

use crate::Vec3;

/// Hits closer than this to the ray origin are ignored, m.
pub const MIN_HIT_DISTANCE: f64 = 1e-6;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub dir: Vec3,
    inv_dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        debug_assert!((dir.norm() - 1.0).abs() < 1e-9, "ray direction must be normalized");
        Self { origin, dir, inv_dir: dir.map(|c| 1.0 / c) }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub face: u32,
    pub t: f64,
    /// Barycentric weights of the second and third vertex.
    pub u: f64,
    pub v: f64,
}

impl Hit {
    /// Orders by distance, then by face id.
    fn closer_than(&self, other: &Hit) -> bool {
        self.t < other.t || (self.t == other.t && self.face < other.face)
    }
}

/// Triangle stored as origin vertex plus two edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub v0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    cross_norm: f64,
}

impl Triangle {
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Self {
        let (e1, e2) = (b - a, c - a);
        Self { v0: a, e1, e2, cross_norm: e1.cross(&e2).norm() }
    }

    pub fn from_array([a, b, c]: [Vec3; 3]) -> Self {
        Self::new(a, b, c)
    }

    pub fn vertices(&self) -> [Vec3; 3] {
        [self.v0, self.v0 + self.e1, self.v0 + self.e2]
    }

    /// Unit normal following the vertex winding.
    pub fn normal(&self) -> Vec3 {
        self.e1.cross(&self.e2) / self.cross_norm
    }

    pub fn area(&self) -> f64 {
        0.5 * self.cross_norm
    }

    pub fn centroid(&self) -> Vec3 {
        self.v0 + (self.e1 + self.e2) / 3.0
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        let [a, b, c] = self.vertices();
        (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
    }

    /// Double-sided Möller–Trumbore test for `t` in `(t_min, t_max)`.
    /// Rays within 1e-12 (cosine) of the triangle plane miss.
    pub fn intersect(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<(f64, f64, f64)> {
        let p = ray.dir.cross(&self.e2);
        let det = self.e1.dot(&p);
        if det.abs() <= 1e-12 * self.cross_norm {
            return None;
        }
        let inv = 1.0 / det;
        let s = ray.origin - self.v0;
        let u = s.dot(&p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(&self.e1);
        let v = ray.dir.dot(&q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = self.e2.dot(&q) * inv;
        (t > t_min && t < t_max).then_some((t, u, v))
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: first index into `order`. Interior: index of the right child
    /// (the left child follows the node directly).
    offset: u32,
    /// Primitive count; zero for interior nodes.
    count: u32,
}

impl Node {
    /// Entry distance of the ray into the box, if it enters before `t_max`.
    fn entry(&self, ray: &Ray, t_max: f64) -> Option<f64> {
        let t1 = (self.lo - ray.origin).component_mul(&ray.inv_dir);
        let t2 = (self.hi - ray.origin).component_mul(&ray.inv_dir);
        let mut near = 0.0f64;
        let mut far = t_max;
        for k in 0..3 {
            near = near.max(t1[k].min(t2[k]));
            far = far.min(t1[k].max(t2[k]));
        }
        (near <= far).then_some(near)
    }
}

/// Triangles plus a median-split BVH over them.
#[derive(Debug, Clone)]
pub struct Accel {
    triangles: Vec<Triangle>,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Accel {
    pub fn new(triangles: Vec<Triangle>) -> Self {
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        if !triangles.is_empty() {
            let bounds: Vec<(Vec3, Vec3)> = triangles.iter().map(Triangle::bounds).collect();
            let centroids: Vec<Vec3> = triangles.iter().map(Triangle::centroid).collect();
            build(&bounds, &centroids, &mut order, 0, &mut nodes);
        }
        Self { triangles, nodes, order }
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn traverse(&self, ray: &Ray, t_max: impl Fn() -> f64, mut leaf: impl FnMut(u32) -> bool) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = [0u32; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.entry(ray, t_max()).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &prim in &self.order[start..start + node.count as usize] {
                    if !leaf(prim) {
                        return;
                    }
                }
            } else {
                let idx = stack[top];
                stack[top] = node.offset;
                stack[top + 1] = idx + 1;
                top += 2;
            }
        }
    }

    /// Nearest hit in `(t_min, t_max)`; equal distances resolve to the lowest face id.
    pub fn nearest(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<Hit> {
        let best = std::cell::Cell::new(None::<Hit>);
        self.traverse(
            ray,
            || best.get().map_or(t_max, |h| h.t),
            |prim| {
                let limit = best.get().map_or(t_max, |h| h.t);
                // equal-distance hits must still be seen for the id tie-break
                if let Some((t, u, v)) = self.triangles[prim as usize].intersect(ray, t_min, limit.next_up()) {
                    let hit = Hit { face: prim, t, u, v };
                    if best.get().is_none_or(|b| hit.closer_than(&b)) {
                        best.set(Some(hit));
                    }
                }
                true
            },
        );
        best.get()
    }

    /// Reference scan over every triangle, same ordering rule as [`Accel::nearest`].
    pub fn nearest_brute_force(&self, ray: &Ray, t_min: f64, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, tri) in self.triangles.iter().enumerate() {
            if let Some((t, u, v)) = tri.intersect(ray, t_min, t_max) {
                let hit = Hit { face: i as u32, t, u, v };
                if best.is_none_or(|b| hit.closer_than(&b)) {
                    best = Some(hit);
                }
            }
        }
        best
    }

    /// True if any triangle not rejected by `skip` is hit in `(t_min, t_max)`.
    pub fn occluded(&self, ray: &Ray, t_min: f64, t_max: f64, skip: impl Fn(u32) -> bool) -> bool {
        let mut blocked = false;
        self.traverse(
            ray,
            || t_max,
            |prim| {
                if !skip(prim) && self.triangles[prim as usize].intersect(ray, t_min, t_max).is_some() {
                    blocked = true;
                    return false;
                }
                true
            },
        );
        blocked
    }

    /// Calls `f` for every hit in `(t_min, t_max)`, in no particular order.
    pub fn for_each_hit(&self, ray: &Ray, t_min: f64, t_max: f64, mut f: impl FnMut(Hit)) {
        self.traverse(
            ray,
            || t_max,
            |prim| {
                if let Some((t, u, v)) = self.triangles[prim as usize].intersect(ray, t_min, t_max) {
                    f(Hit { face: prim, t, u, v });
                }
                true
            },
        );
    }
}

fn build(bounds: &[(Vec3, Vec3)], centroids: &[Vec3], order: &mut [u32], base: usize, nodes: &mut Vec<Node>) {
    let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    let (mut clo, mut chi) = (lo, hi);
    for &i in order.iter() {
        let (a, b) = bounds[i as usize];
        lo = lo.inf(&a);
        hi = hi.sup(&b);
        clo = clo.inf(&centroids[i as usize]);
        chi = chi.sup(&centroids[i as usize]);
    }
    let pad = (hi - lo).map(|e| e * 1e-9 + 1e-12);
    let (lo, hi) = (lo - pad, hi + pad);
    let idx = nodes.len();
    let extent = chi - clo;
    let axis = extent.imax();
    if order.len() <= LEAF_SIZE || extent[axis] <= 0.0 {
        nodes.push(Node { lo, hi, offset: base as u32, count: order.len() as u32 });
        return;
    }
    nodes.push(Node { lo, hi, offset: 0, count: 0 });
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis]).then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build(bounds, centroids, left, base, nodes);
    nodes[idx].offset = nodes.len() as u32;
    build(bounds, centroids, right, base + mid, nodes);
}
