//! Oriented triangular meshes of the poloidal `(r, z)` half-plane.
//!
//! Cells are stored counterclockwise. Every edge carries a global orientation
//! from its lower to its higher vertex index, and each cell records the sign
//! of its local edge orientation relative to that global one. The conforming
//! edge elements in [`crate::spaces`] take their DOF signs from here.

mod gmsh;
mod locate;
mod refine;
mod vtu;

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, OnceLock};

use crate::{Error, Result};

pub use gmsh::{gmsh_string, parse_gmsh, read_gmsh, write_gmsh};
pub(crate) use locate::barycentric;
pub use locate::{LocationStatus, PointLocation};
pub use refine::{refine_along_levelset, refine_marked};
pub use vtu::{vtu_string, write_vtu, VtuData};

/// A point of the poloidal plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub r: f64,
    pub z: f64,
}

impl Point2 {
    pub const fn new(r: f64, z: f64) -> Self {
        Self { r, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.r * other.r + self.z * other.z
    }

    /// 2D cross product `self.r * other.z - self.z * other.r`.
    pub fn cross(self, other: Self) -> f64 {
        self.r * other.z - self.z * other.r
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Counterclockwise quarter turn, `(a_r, a_z)^perp = (-a_z, a_r)`.
    pub fn perp(self) -> Self {
        Self::new(-self.z, self.r)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.r, self.z]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.r + o.r, self.z + o.z)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.r - o.r, self.z - o.z)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        Point2::new(self * p.r, self * p.z)
    }
}

/// An edge on the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub edge: usize,
    /// The single cell containing the edge.
    pub cell: usize,
    /// Local index of the edge in `cell` (the edge opposite local vertex `local`).
    pub local: usize,
    /// Unit outward normal.
    pub normal: Point2,
    pub tag: i32,
}

/// Per-cell affine geometry.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub points: [Point2; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [Point2; 3],
    /// Columns `x1 - x0` and `x2 - x0` of the reference map.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
}

impl CellGeometry {
    pub fn new(points: [Point2; 3]) -> Self {
        let e1 = points[1] - points[0];
        let e2 = points[2] - points[0];
        let det = e1.cross(e2);
        let twice = det;
        let grad_bary = std::array::from_fn(|i| {
            let a = points[(i + 1) % 3];
            let b = points[(i + 2) % 3];
            Point2::new((a.z - b.z) / twice, (b.r - a.r) / twice)
        });
        Self { points, area: 0.5 * det, grad_bary, jacobian: [[e1.r, e2.r], [e1.z, e2.z]], det }
    }

    pub fn map(&self, bary: [f64; 3]) -> Point2 {
        Point2::new(
            bary[0] * self.points[0].r + bary[1] * self.points[1].r + bary[2] * self.points[2].r,
            bary[0] * self.points[0].z + bary[1] * self.points[1].z + bary[2] * self.points[2].z,
        )
    }

    pub fn centroid(&self) -> Point2 {
        self.map([1.0 / 3.0; 3])
    }
}

/// Counterclockwise triangular mesh with derived edge topology.
#[derive(Debug)]
pub struct Mesh2D {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    region_tags: Vec<i32>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    cell_edge_signs: Vec<[f64; 3]>,
    edge_cells: Vec<[Option<usize>; 2]>,
    boundary: Vec<BoundaryEdge>,
    edge_boundary: Vec<Option<usize>>,
    locator: OnceLock<locate::CellTree>,
}

impl Clone for Mesh2D {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
            region_tags: self.region_tags.clone(),
            edges: self.edges.clone(),
            cell_edges: self.cell_edges.clone(),
            cell_edge_signs: self.cell_edge_signs.clone(),
            edge_cells: self.edge_cells.clone(),
            boundary: self.boundary.clone(),
            edge_boundary: self.edge_boundary.clone(),
            locator: OnceLock::new(),
        }
    }
}

/// Sorted vertex pair used as an undirected edge key.
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    /// Builds a mesh from raw connectivity.
    ///
    /// Clockwise cells are reordered. `boundary_tags` maps vertex pairs of
    /// boundary edges to a tag; boundary edges absent from the map get tag 0.
    pub fn new(
        vertices: Vec<Point2>,
        cells: Vec<[usize; 3]>,
        region_tags: Vec<i32>,
        boundary_tags: &HashMap<(usize, usize), i32>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        if region_tags.len() != cells.len() {
            return Err(Error::InvalidMesh(format!("{} region tags for {} cells", region_tags.len(), cells.len())));
        }
        if let Some(p) = vertices.iter().find(|p| !(p.r > 0.0) || !p.z.is_finite()) {
            return Err(Error::AxisTouched { r: p.r });
        }
        let mut cells = cells;
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("cell {c} references a missing vertex")));
            }
            let area = 0.5 * (vertices[cell[1]] - vertices[cell[0]]).cross(vertices[cell[2]] - vertices[cell[0]]);
            if area < 0.0 {
                cell.swap(1, 2);
            } else if area == 0.0 {
                return Err(Error::NonPositiveArea { cell: c, area });
            }
        }

        let mut edge_map: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..3 {
                let key = edge_key(cell[(i + 1) % 3], cell[(i + 2) % 3]);
                edge_map.entry(key).or_default().push((c, i));
            }
        }

        let mut edges = Vec::with_capacity(edge_map.len());
        let mut edge_cells = Vec::with_capacity(edge_map.len());
        let mut cell_edges = vec![[0usize; 3]; cells.len()];
        let mut cell_edge_signs = vec![[0.0f64; 3]; cells.len()];
        let mut boundary = Vec::new();
        let mut edge_boundary = Vec::with_capacity(edge_map.len());
        for (e, ((lo, hi), users)) in edge_map.into_iter().enumerate() {
            if users.len() > 2 {
                return Err(Error::InvalidMesh(format!("edge ({lo}, {hi}) is shared by {} cells", users.len())));
            }
            edges.push([lo, hi]);
            for &(c, i) in &users {
                cell_edges[c][i] = e;
                let from = cells[c][(i + 1) % 3];
                cell_edge_signs[c][i] = if from == lo { 1.0 } else { -1.0 };
            }
            if users.len() == 2 && cell_edge_signs[users[0].0][users[0].1] == cell_edge_signs[users[1].0][users[1].1] {
                return Err(Error::InvalidMesh(format!(
                    "cells {} and {} traverse edge ({lo}, {hi}) in the same direction",
                    users[0].0, users[1].0
                )));
            }
            edge_cells.push([Some(users[0].0), users.get(1).map(|u| u.0)]);
            if users.len() == 1 {
                let (c, i) = users[0];
                let a = vertices[cells[c][(i + 1) % 3]];
                let b = vertices[cells[c][(i + 2) % 3]];
                let t = b - a;
                let len = t.norm();
                edge_boundary.push(Some(boundary.len()));
                boundary.push(BoundaryEdge {
                    edge: e,
                    cell: c,
                    local: i,
                    normal: Point2::new(t.z / len, -t.r / len),
                    tag: boundary_tags.get(&(lo, hi)).copied().unwrap_or(0),
                });
            } else {
                edge_boundary.push(None);
            }
        }

        Ok(Self {
            vertices,
            cells,
            region_tags,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            boundary,
            edge_boundary,
            locator: OnceLock::new(),
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn region_tags(&self) -> &[i32] {
        &self.region_tags
    }

    pub fn cell_edges(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    /// `+1` where the local edge orientation matches the global one.
    pub fn cell_edge_signs(&self, cell: usize) -> [f64; 3] {
        self.cell_edge_signs[cell]
    }

    pub fn edge_cells(&self, edge: usize) -> [Option<usize>; 2] {
        self.edge_cells[edge]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn boundary_edge(&self, edge: usize) -> Option<&BoundaryEdge> {
        self.edge_boundary[edge].map(|b| &self.boundary[b])
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn geometry(&self, cell: usize) -> CellGeometry {
        let [a, b, c] = self.cells[cell];
        CellGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn centroid(&self, cell: usize) -> Point2 {
        self.geometry(cell).centroid()
    }

    pub fn signed_area(&self, cell: usize) -> f64 {
        self.geometry(cell).area
    }

    /// Global unit tangent of an edge, from lower to higher vertex index.
    pub fn edge_tangent(&self, edge: usize) -> Point2 {
        let [a, b] = self.edges[edge];
        let t = self.vertices[b] - self.vertices[a];
        (1.0 / t.norm()) * t
    }

    /// Global unit normal of an edge: the tangent turned clockwise.
    pub fn edge_normal(&self, edge: usize) -> Point2 {
        let t = self.edge_tangent(edge);
        Point2::new(t.z, -t.r)
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    pub fn edge_midpoint(&self, edge: usize) -> Point2 {
        let [a, b] = self.edges[edge];
        0.5 * (self.vertices[a] + self.vertices[b])
    }

    /// Tags of boundary edges keyed by their sorted vertex pair.
    pub fn boundary_tag_map(&self) -> HashMap<(usize, usize), i32> {
        self.boundary
            .iter()
            .map(|b| {
                let [lo, hi] = self.edges[b.edge];
                ((lo, hi), b.tag)
            })
            .collect()
    }

    /// Whether two meshes have identical vertices and connectivity.
    pub fn same_as(&self, other: &Mesh2D) -> bool {
        std::ptr::eq(self, other) || (self.vertices == other.vertices && self.cells == other.cells)
    }

    pub fn r_range(&self) -> (f64, f64) {
        self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.r), hi.max(p.r)))
    }

    /// Checks edge incidence, orientation and positivity invariants.
    pub fn check_invariants(&self) -> Result<()> {
        for c in 0..self.num_cells() {
            let area = self.signed_area(c);
            if !(area > 0.0) {
                return Err(Error::NonPositiveArea { cell: c, area });
            }
        }
        let mut count = vec![0usize; self.num_edges()];
        for ce in &self.cell_edges {
            for &e in ce {
                count[e] += 1;
            }
        }
        for (e, &n) in count.iter().enumerate() {
            let on_boundary = self.edge_boundary[e].is_some();
            let expected = if on_boundary { 1 } else { 2 };
            if n != expected {
                return Err(Error::InvalidMesh(format!("edge {e} is used by {n} cells, expected {expected}")));
            }
            let [lo, hi] = self.edges[e];
            if lo >= hi {
                return Err(Error::InvalidMesh(format!("edge {e} is not oriented low to high")));
            }
        }
        // A hanging node shows up as a boundary vertex in the interior of a
        // boundary edge.
        let mut bverts: Vec<usize> = self.boundary.iter().flat_map(|b| self.edges[b.edge]).collect();
        bverts.sort_unstable();
        bverts.dedup();
        for b in &self.boundary {
            let [lo, hi] = self.edges[b.edge];
            let (a, q) = (self.vertices[lo], self.vertices[hi]);
            let t = q - a;
            let len2 = t.dot(t);
            for &v in &bverts {
                if v == lo || v == hi {
                    continue;
                }
                let d = self.vertices[v] - a;
                let s = d.dot(t) / len2;
                if s > 1e-12 && s < 1.0 - 1e-12 && d.cross(t).abs() <= 1e-12 * len2 {
                    return Err(Error::InvalidMesh(format!("hanging vertex {v} on edge {}", b.edge)));
                }
            }
        }
        Ok(())
    }

    /// `sum over boundary edges of |e| n`; vanishes for a closed boundary.
    pub fn boundary_normal_sum(&self) -> Point2 {
        self.boundary.iter().fold(Point2::default(), |acc, b| acc + self.edge_length(b.edge) * b.normal)
    }

    /// Locates `p`, building the bounding-box tree on first use.
    pub fn locate_point(&self, p: Point2) -> PointLocation {
        self.locator.get_or_init(|| locate::CellTree::build(self)).locate(self, p)
    }
}

/// Structured mesh of `[rmin, rmax] x [zmin, zmax]` with `nr x nz` rectangles,
/// each split by the diagonal from its lower-left to its upper-right corner.
///
/// Boundary tags: 1 bottom, 2 right, 3 top, 4 left. All cells get region tag 1.
pub fn build_structured_mesh(rmin: f64, rmax: f64, zmin: f64, zmax: f64, nr: usize, nz: usize) -> Result<Mesh2D> {
    if !(rmin > 0.0) {
        return Err(Error::AxisTouched { r: rmin });
    }
    if !(rmax > rmin) || !(zmax > zmin) || !rmax.is_finite() || !zmax.is_finite() {
        return Err(Error::DegenerateExtent(format!("[{rmin}, {rmax}] x [{zmin}, {zmax}]")));
    }
    if nr == 0 || nz == 0 {
        return Err(Error::DegenerateExtent(format!("{nr} x {nz} subdivisions")));
    }
    let idx = |i: usize, j: usize| j * (nr + 1) + i;
    let mut vertices = Vec::with_capacity((nr + 1) * (nz + 1));
    for j in 0..=nz {
        let z = zmin + (zmax - zmin) * j as f64 / nz as f64;
        for i in 0..=nr {
            let r = rmin + (rmax - rmin) * i as f64 / nr as f64;
            vertices.push(Point2::new(r, z));
        }
    }
    let mut cells = Vec::with_capacity(2 * nr * nz);
    for j in 0..nz {
        for i in 0..nr {
            let (p00, p10, p11, p01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([p00, p10, p11]);
            cells.push([p00, p11, p01]);
        }
    }
    let mut tags = HashMap::new();
    for i in 0..nr {
        tags.insert(edge_key(idx(i, 0), idx(i + 1, 0)), 1);
        tags.insert(edge_key(idx(i, nz), idx(i + 1, nz)), 3);
    }
    for j in 0..nz {
        tags.insert(edge_key(idx(nr, j), idx(nr, j + 1)), 2);
        tags.insert(edge_key(idx(0, j), idx(0, j + 1)), 4);
    }
    let n = cells.len();
    Mesh2D::new(vertices, cells, vec![1; n], &tags)
}

/// Moves every node by `(alpha sin r, alpha sin z)`, keeping connectivity.
pub fn perturb_mesh(mesh: &Mesh2D, alpha: f64) -> Result<Mesh2D> {
    let vertices: Vec<Point2> =
        mesh.vertices.iter().map(|p| Point2::new(p.r + alpha * p.r.sin(), p.z + alpha * p.z.sin())).collect();
    for (c, cell) in mesh.cells.iter().enumerate() {
        let area = 0.5 * (vertices[cell[1]] - vertices[cell[0]]).cross(vertices[cell[2]] - vertices[cell[0]]);
        if !(area > 0.0) {
            return Err(Error::NonPositiveArea { cell: c, area });
        }
    }
    Mesh2D::new(vertices, mesh.cells.clone(), mesh.region_tags.clone(), &mesh.boundary_tag_map())
}

/// Shared handle to an immutable mesh.
pub type MeshRef = Arc<Mesh2D>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.boundary_edges().len(), 4);

        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_cells(), 8);
        m.check_invariants().unwrap();
    }

    #[test]
    fn rejects_axis_and_degenerate_extents() {
        assert!(matches!(build_structured_mesh(0.0, 1.0, 0.0, 1.0, 1, 1), Err(Error::AxisTouched { .. })));
        assert!(matches!(build_structured_mesh(1.0, 1.0, 0.0, 1.0, 1, 1), Err(Error::DegenerateExtent(_))));
        assert!(build_structured_mesh(1.0, 2.0, 0.0, 1.0, 0, 3).is_err());
    }

    #[test]
    fn edge_orientation_and_signs() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 3, 2).unwrap();
        for (e, [lo, hi]) in m.edges().iter().enumerate() {
            assert!(lo < hi);
            if let [Some(a), Some(b)] = m.edge_cells(e) {
                let la = m.cell_edges(a).iter().position(|&x| x == e).unwrap();
                let lb = m.cell_edges(b).iter().position(|&x| x == e).unwrap();
                assert_eq!(m.cell_edge_signs(a)[la], -m.cell_edge_signs(b)[lb]);
            }
        }
        let tags: Vec<i32> = m.boundary_edges().iter().map(|b| b.tag).collect();
        assert!(tags.iter().all(|&t| (1..=4).contains(&t)));
    }

    #[test]
    fn boundary_normals_close() {
        let m = build_structured_mesh(1.0, 2.0, -0.5, 1.0, 5, 7).unwrap();
        let s = m.boundary_normal_sum();
        assert!(s.norm() < 1e-12);
        let p = perturb_mesh(&m, 0.05).unwrap();
        assert!(p.boundary_normal_sum().norm() < 1e-12);
    }

    #[test]
    fn perturbation_of_single_node() {
        let alpha = 0.05f64;
        let (r, z) = (1.0f64, 2.0f64);
        let expected = (r + alpha * r.sin(), z + alpha * z.sin());
        assert!((expected.0 - 1.04207355).abs() < 1e-8);
        assert!((expected.1 - 2.04546487).abs() < 1e-8);

        let m = build_structured_mesh(1.0, 2.0, 2.0, 3.0, 1, 1).unwrap();
        let p = perturb_mesh(&m, alpha).unwrap();
        let v = p.vertices()[0];
        assert_eq!((v.r, v.z), expected);
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 4, 4).unwrap();
        let p = perturb_mesh(&m, 0.0).unwrap();
        assert!(p.same_as(&m));
    }

    #[test]
    fn perturbed_fixture_keeps_positive_area() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 8, 8).unwrap();
        let p = perturb_mesh(&m, 0.05).unwrap();
        assert_eq!(p.num_cells(), 128);
        assert!((0..p.num_cells()).all(|c| p.signed_area(c) > 0.0));
        p.check_invariants().unwrap();
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let v = vec![Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(1.0, 1.0)];
        let m = Mesh2D::new(v, vec![[0, 2, 1]], vec![1], &HashMap::new()).unwrap();
        assert!(m.signed_area(0) > 0.0);
    }
}
