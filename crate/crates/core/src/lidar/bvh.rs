//! CPU ray casting against world-space triangle soups.
//!
//! An axis-aligned BVH with deterministic median-split construction backs
//! the fast path; an exhaustive scan over all triangles is kept as the
//! test oracle. Both resolve equal-distance ties by ascending
//! (entity id, face index), so results do not depend on traversal order.

use nalgebra::{Matrix4, Point3, Vector3};

use crate::ecs::EntityId;
use crate::scene::{transform_points, Mesh};

/// Minimum hit distance; intersections closer than this (e.g. the ray
/// origin sitting on a surface) are ignored.
const T_MIN: f64 = 1e-9;
/// Determinant cutoff below which a ray is parallel to the triangle plane.
const DET_EPS: f64 = 1e-12;
const LEAF_SIZE: usize = 4;

/// One world-space triangle with its provenance.
#[derive(Debug, Clone)]
pub struct SceneTriangle {
    pub v0: Point3<f64>,
    pub v1: Point3<f64>,
    pub v2: Point3<f64>,
    pub entity: EntityId,
    pub face: usize,
}

/// A lidar return: nearest intersection along a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayHit {
    /// Slant range in meters.
    pub range: f64,
    /// Hit point in world coordinates.
    pub point: Point3<f64>,
    /// Unit surface normal oriented toward the ray origin.
    pub normal: Vector3<f64>,
    /// Incidence angle between the reversed ray and the oriented normal,
    /// in [0, pi/2).
    pub incidence: f64,
    pub entity: EntityId,
    pub face: usize,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point3<f64>,
    max: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow_point(&mut self, p: &Point3<f64>) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    fn grow_triangle(&mut self, t: &SceneTriangle) {
        self.grow_point(&t.v0);
        self.grow_point(&t.v1);
        self.grow_point(&t.v2);
    }

    /// Slab test; returns the entry distance when the ray touches the box
    /// within `t_max`.
    fn entry(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    /// Leaf: index of the first triangle; inner: index of the left child.
    first: usize,
    /// Leaf: number of triangles; inner: 0 (children are first, first+1).
    count: usize,
}

/// Immutable spatial index over a set of world-space triangles.
pub struct SceneIndex {
    triangles: Vec<SceneTriangle>,
    nodes: Vec<Node>,
}

impl SceneIndex {
    /// Gathers world-space triangles from (mesh, world transform, entity)
    /// triplets and builds the index.
    pub fn from_meshes<'a, I>(meshes: I) -> Self
    where
        I: IntoIterator<Item = (&'a Mesh, &'a Matrix4<f64>, EntityId)>,
    {
        let mut triangles = Vec::new();
        for (mesh, world, entity) in meshes {
            let verts = transform_points(world, &mesh.vertices);
            for (face, tri) in mesh.triangles.iter().enumerate() {
                triangles.push(SceneTriangle {
                    v0: verts[tri[0] as usize],
                    v1: verts[tri[1] as usize],
                    v2: verts[tri[2] as usize],
                    entity,
                    face,
                });
            }
        }
        Self::build(triangles)
    }

    pub fn build(mut triangles: Vec<SceneTriangle>) -> Self {
        let mut nodes = Vec::new();
        if triangles.is_empty() {
            return SceneIndex { triangles, nodes };
        }
        let n = triangles.len();
        nodes.push(Node { aabb: Aabb::empty(), first: 0, count: n });
        let mut stack = vec![0usize];
        while let Some(node_idx) = stack.pop() {
            let (first, count) = (nodes[node_idx].first, nodes[node_idx].count);
            let mut bounds = Aabb::empty();
            let mut centroid_bounds = Aabb::empty();
            for t in &triangles[first..first + count] {
                bounds.grow_triangle(t);
                centroid_bounds.grow_point(&centroid(t));
            }
            nodes[node_idx].aabb = bounds;
            if count <= LEAF_SIZE {
                continue;
            }
            // Median split along the widest centroid axis. The sort key is
            // total (centroid, entity, face) so construction is deterministic.
            let extent = centroid_bounds.max - centroid_bounds.min;
            let mut axis = 0;
            if extent[1] > extent[axis] {
                axis = 1;
            }
            if extent[2] > extent[axis] {
                axis = 2;
            }
            if extent[axis] <= 0.0 {
                continue; // all centroids coincide; keep as a fat leaf
            }
            triangles[first..first + count].sort_by(|a, b| {
                centroid(a)[axis]
                    .partial_cmp(&centroid(b)[axis])
                    .unwrap()
                    .then(a.entity.cmp(&b.entity))
                    .then(a.face.cmp(&b.face))
            });
            let half = count / 2;
            let left = Node { aabb: Aabb::empty(), first, count: half };
            let right = Node { aabb: Aabb::empty(), first: first + half, count: count - half };
            let left_idx = nodes.len();
            nodes.push(left);
            nodes.push(right);
            nodes[node_idx].first = left_idx;
            nodes[node_idx].count = 0;
            stack.push(left_idx);
            stack.push(left_idx + 1);
        }
        SceneIndex { triangles, nodes }
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Nearest intersection within `max_range`, ties broken by ascending
    /// (entity, face).
    pub fn cast(
        &self,
        origin: &Point3<f64>,
        direction: &Vector3<f64>,
        max_range: f64,
    ) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vector3::new(1.0 / direction[0], 1.0 / direction[1], 1.0 / direction[2]);
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(node_idx) = stack.pop() {
            let node = &self.nodes[node_idx];
            let limit = best.map(|(t, _)| t).unwrap_or(max_range);
            match node.aabb.entry(origin, &inv_dir, limit) {
                // Strict comparison: a box entered exactly at the current
                // best distance may still hold an equal-t tie winner.
                Some(entry) if entry <= limit => {}
                _ => continue,
            }
            if node.count > 0 {
                for idx in node.first..node.first + node.count {
                    if let Some(t) =
                        intersect_triangle(&self.triangles[idx], origin, direction, max_range)
                    {
                        if better(t, idx, &best, &self.triangles) {
                            best = Some((t, idx));
                        }
                    }
                }
            } else {
                stack.push(node.first);
                stack.push(node.first + 1);
            }
        }
        best.map(|(t, idx)| make_hit(&self.triangles[idx], origin, direction, t))
    }

    /// Exhaustive nearest-hit scan over every triangle; the oracle the
    /// BVH path is tested against.
    pub fn cast_exhaustive(
        &self,
        origin: &Point3<f64>,
        direction: &Vector3<f64>,
        max_range: f64,
    ) -> Option<RayHit> {
        let mut best: Option<(f64, usize)> = None;
        for (idx, tri) in self.triangles.iter().enumerate() {
            if let Some(t) = intersect_triangle(tri, origin, direction, max_range) {
                if better(t, idx, &best, &self.triangles) {
                    best = Some((t, idx));
                }
            }
        }
        best.map(|(t, idx)| make_hit(&self.triangles[idx], origin, direction, t))
    }
}

fn centroid(t: &SceneTriangle) -> Point3<f64> {
    Point3::from((t.v0.coords + t.v1.coords + t.v2.coords) / 3.0)
}

fn better(t: f64, idx: usize, best: &Option<(f64, usize)>, tris: &[SceneTriangle]) -> bool {
    match best {
        None => true,
        Some((bt, bidx)) => {
            let a = (t, tris[idx].entity, tris[idx].face);
            let b = (*bt, tris[*bidx].entity, tris[*bidx].face);
            a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
        }
    }
}

/// Double-sided Moller-Trumbore intersection returning the ray parameter.
fn intersect_triangle(
    tri: &SceneTriangle,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    max_range: f64,
) -> Option<f64> {
    let e1 = tri.v1 - tri.v0;
    let e2 = tri.v2 - tri.v0;
    let p = direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < DET_EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - tri.v0;
    let u = s.dot(&p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = direction.dot(&q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv_det;
    if t < T_MIN || t > max_range {
        return None;
    }
    Some(t)
}

fn make_hit(
    tri: &SceneTriangle,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    t: f64,
) -> RayHit {
    let mut normal = (tri.v1 - tri.v0).cross(&(tri.v2 - tri.v0)).normalize();
    if normal.dot(direction) > 0.0 {
        normal = -normal;
    }
    let cos_theta = (-direction).dot(&normal).clamp(-1.0, 1.0);
    RayHit {
        range: t,
        point: origin + direction * t,
        normal,
        incidence: cos_theta.acos(),
        entity: tri.entity,
        face: tri.face,
    }
}

/// Convenience single-ray cast over a set of placed meshes.
pub fn raycast<'a, I>(
    meshes: I,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    max_range: f64,
) -> Option<RayHit>
where
    I: IntoIterator<Item = (&'a Mesh, &'a Matrix4<f64>, EntityId)>,
{
    SceneIndex::from_meshes(meshes).cast(origin, direction, max_range)
}
