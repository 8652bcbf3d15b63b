//! Point location over an axis-aligned bounding-box tree of cells.

use super::{Mesh2D, Point2};

/// Barycentric tolerance for accepting a point as inside a cell.
const INSIDE_TOL: f64 = 1e-10;
const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationStatus {
    Inside,
    OnBoundary,
    /// Outside every cell; `cell` is the nearest one and the barycentric
    /// coordinates are those of the closest point of that cell.
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLocation {
    pub cell: usize,
    pub bary: [f64; 3],
    pub status: LocationStatus,
}

impl PointLocation {
    pub fn is_outside(&self) -> bool {
        self.status == LocationStatus::Outside
    }
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Point2,
    hi: Point2,
}

impl Aabb {
    fn empty() -> Self {
        Self { lo: Point2::new(f64::INFINITY, f64::INFINITY), hi: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: Point2) {
        self.lo = Point2::new(self.lo.r.min(p.r), self.lo.z.min(p.z));
        self.hi = Point2::new(self.hi.r.max(p.r), self.hi.z.max(p.z));
    }

    fn merge(&mut self, o: &Aabb) {
        self.grow(o.lo);
        self.grow(o.hi);
    }

    fn contains(&self, p: Point2, tol: f64) -> bool {
        p.r >= self.lo.r - tol && p.r <= self.hi.r + tol && p.z >= self.lo.z - tol && p.z <= self.hi.z + tol
    }

    fn distance2(&self, p: Point2) -> f64 {
        let dr = (self.lo.r - p.r).max(0.0).max(p.r - self.hi.r);
        let dz = (self.lo.z - p.z).max(0.0).max(p.z - self.hi.z);
        dr * dr + dz * dz
    }
}

#[derive(Debug)]
enum Node {
    Leaf { bbox: Aabb, start: usize, end: usize },
    Branch { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Branch { bbox, .. } => bbox,
        }
    }
}

/// Bounding-box hierarchy over the cells of one mesh.
#[derive(Debug)]
pub(crate) struct CellTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
    tol: f64,
}

impl CellTree {
    pub(crate) fn build(mesh: &Mesh2D) -> Self {
        let boxes: Vec<Aabb> = (0..mesh.num_cells())
            .map(|c| {
                let mut b = Aabb::empty();
                for &v in &mesh.cells()[c] {
                    b.grow(mesh.vertices()[v]);
                }
                b
            })
            .collect();
        let centers: Vec<Point2> = boxes.iter().map(|b| 0.5 * (b.lo + b.hi)).collect();
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::new();
        let n = order.len();
        Self::split(&mut nodes, &mut order, 0, n, &boxes, &centers);
        let mut extent = Aabb::empty();
        for b in &boxes {
            extent.merge(b);
        }
        let scale = (extent.hi - extent.lo).norm().max(1.0);
        Self { nodes, order, tol: 1e-10 * scale }
    }

    fn split(
        nodes: &mut Vec<Node>,
        order: &mut [usize],
        start: usize,
        end: usize,
        boxes: &[Aabb],
        centers: &[Point2],
    ) -> usize {
        let mut bbox = Aabb::empty();
        for &c in &order[start..end] {
            bbox.merge(&boxes[c]);
        }
        let id = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { bbox, start, end });
            return id;
        }
        nodes.push(Node::Leaf { bbox, start, end });
        let wide_r = bbox.hi.r - bbox.lo.r >= bbox.hi.z - bbox.lo.z;
        let key = |c: &usize| if wide_r { centers[*c].r } else { centers[*c].z };
        let mid = (start + end) / 2;
        order[start..end].sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
        let left = Self::split(nodes, order, start, mid, boxes, centers);
        let right = Self::split(nodes, order, mid, end, boxes, centers);
        nodes[id] = Node::Branch { bbox, left, right };
        id
    }

    pub(crate) fn locate(&self, mesh: &Mesh2D, p: Point2) -> PointLocation {
        let mut best_boundary: Option<PointLocation> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !node.bbox().contains(p, self.tol) {
                continue;
            }
            match *node {
                Node::Branch { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
                Node::Leaf { start, end, .. } => {
                    for &c in &self.order[start..end] {
                        let bary = barycentric(mesh, c, p);
                        let min = bary.iter().copied().fold(f64::INFINITY, f64::min);
                        if min >= INSIDE_TOL {
                            return PointLocation { cell: c, bary, status: LocationStatus::Inside };
                        }
                        if min >= -INSIDE_TOL && best_boundary.is_none() {
                            best_boundary = Some(PointLocation { cell: c, bary, status: LocationStatus::OnBoundary });
                        }
                    }
                }
            }
        }
        if let Some(loc) = best_boundary {
            return loc;
        }
        self.nearest(mesh, p)
    }

    fn nearest(&self, mesh: &Mesh2D, p: Point2) -> PointLocation {
        let mut best = (f64::INFINITY, 0usize, [1.0, 0.0, 0.0]);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bbox().distance2(p) > best.0 {
                continue;
            }
            match *node {
                Node::Branch { left, right, .. } => {
                    let (dl, dr) = (self.nodes[left].bbox().distance2(p), self.nodes[right].bbox().distance2(p));
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
                Node::Leaf { start, end, .. } => {
                    for &c in &self.order[start..end] {
                        let (d2, bary) = closest_in_cell(mesh, c, p);
                        if d2 < best.0 || (d2 == best.0 && c < best.1) {
                            best = (d2, c, bary);
                        }
                    }
                }
            }
        }
        PointLocation { cell: best.1, bary: best.2, status: LocationStatus::Outside }
    }
}

/// Barycentric coordinates of `p` with respect to `cell`.
pub(crate) fn barycentric(mesh: &Mesh2D, cell: usize, p: Point2) -> [f64; 3] {
    let [a, b, c] = mesh.cells()[cell].map(|v| mesh.vertices()[v]);
    let det = (b - a).cross(c - a);
    let l1 = (p - a).cross(c - a) / det;
    let l2 = (b - a).cross(p - a) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Squared distance from `p` to the closed triangle and barycentrics of the
/// closest point.
fn closest_in_cell(mesh: &Mesh2D, cell: usize, p: Point2) -> (f64, [f64; 3]) {
    let bary = barycentric(mesh, cell, p);
    if bary.iter().all(|&l| l >= 0.0) {
        return (0.0, bary);
    }
    let verts = mesh.cells()[cell].map(|v| mesh.vertices()[v]);
    let mut best = (f64::INFINITY, bary);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let (a, b) = (verts[j], verts[k]);
        let t = b - a;
        let s = ((p - a).dot(t) / t.dot(t)).clamp(0.0, 1.0);
        let q = a + s * t;
        let d2 = (p - q).dot(p - q);
        if d2 < best.0 {
            let mut bq = [0.0; 3];
            bq[j] = 1.0 - s;
            bq[k] = s;
            best = (d2, bq);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use std::collections::HashMap;

    fn single() -> Mesh2D {
        let v = vec![Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(2.0, 1.0)];
        Mesh2D::new(v, vec![[0, 1, 2]], vec![1], &HashMap::new()).unwrap()
    }

    #[test]
    fn interior_point_barycentrics() {
        let m = single();
        let loc = m.locate_point(Point2::new(1.5, 0.25));
        assert_eq!(loc.status, LocationStatus::Inside);
        let expected = [0.5, 0.25, 0.25];
        for (a, b) in loc.bary.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn vertex_gives_unit_coordinates() {
        let m = single();
        let loc = m.locate_point(Point2::new(2.0, 0.0));
        assert_ne!(loc.status, LocationStatus::Outside);
        assert!((loc.bary[1] - 1.0).abs() < 1e-14);
        assert!(loc.bary[0].abs() < 1e-14 && loc.bary[2].abs() < 1e-14);
    }

    #[test]
    fn outside_point_gets_nearest_cell() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 4, 4).unwrap();
        let loc = m.locate_point(Point2::new(0.5, 0.5));
        assert_eq!(loc.status, LocationStatus::Outside);
        assert!(loc.bary.iter().all(|&l| l >= 0.0));
        let q = m.geometry(loc.cell).map(loc.bary);
        assert!((q.r - 1.0).abs() < 1e-14);
        assert!((q.z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_of_located_points() {
        let m = build_structured_mesh(1.0, 2.0, -1.0, 1.0, 7, 9).unwrap();
        for k in 0..200 {
            let p = Point2::new(1.0 + (k as f64 * 0.618_034).fract(), -1.0 + 2.0 * (k as f64 * 0.414_214).fract());
            let loc = m.locate_point(p);
            assert_ne!(loc.status, LocationStatus::Outside);
            let sum: f64 = loc.bary.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let q = m.geometry(loc.cell).map(loc.bary);
            assert!((q - p).norm() < 1e-12);
        }
    }
}
