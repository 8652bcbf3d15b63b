//! Lowest-order compatible spaces on triangles.
//!
//! Edge DOFs are edge integrals of the normal (RT1) or tangential (N1)
//! component, taken against the global edge orientation of the mesh. The
//! local basis function of edge `i` (opposite vertex `i`) is
//!
//! * RT1: `s_i (x - x_i) / det`, the contravariant Piola image of `x̂ - x̂_i`;
//! * N1: `s_i (λ_{i+1} ∇λ_{i+2} - λ_{i+2} ∇λ_{i+1})`, the covariant Piola
//!   image of the reference Whitney form,
//!
//! where `s_i` is the cell's edge sign. VCG1 DOFs are interleaved, `2 v + c`.

use std::sync::Arc;

use crate::mesh::{CellGeometry, Mesh2D, MeshRef, Point2, PointLocation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    CG1,
    DG0,
    RT1,
    N1,
    VCG1,
}

impl SpaceKind {
    pub fn is_vector(self) -> bool {
        matches!(self, SpaceKind::RT1 | SpaceKind::N1 | SpaceKind::VCG1)
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::CG1 => "CG1",
            SpaceKind::DG0 => "DG0",
            SpaceKind::RT1 => "RT1",
            SpaceKind::N1 => "N1",
            SpaceKind::VCG1 => "VCG1",
        }
    }

    fn local_dofs(self) -> usize {
        match self {
            SpaceKind::DG0 => 1,
            SpaceKind::VCG1 => 6,
            _ => 3,
        }
    }
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Values and first derivatives of every local basis function at one point.
///
/// Scalar functions keep their value in `val[0]`. Derivatives that do not
/// apply to the space are left at zero.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    pub n: usize,
    pub dofs: [usize; 6],
    pub val: [[f64; 2]; 6],
    pub grad: [[f64; 2]; 6],
    pub div: [f64; 6],
    pub rot: [f64; 6],
}

/// A space bound to a mesh. Cheap to clone.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: MeshRef,
    kind: SpaceKind,
}

pub fn build_space(mesh: &MeshRef, kind: SpaceKind) -> FunctionSpace {
    FunctionSpace::new(mesh.clone(), kind)
}

impl FunctionSpace {
    pub fn new(mesh: MeshRef, kind: SpaceKind) -> Self {
        Self { mesh, kind }
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn mesh_ref(&self) -> &MeshRef {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn ndofs(&self) -> usize {
        match self.kind {
            SpaceKind::CG1 => self.mesh.num_vertices(),
            SpaceKind::DG0 => self.mesh.num_cells(),
            SpaceKind::RT1 | SpaceKind::N1 => self.mesh.num_edges(),
            SpaceKind::VCG1 => 2 * self.mesh.num_vertices(),
        }
    }

    /// Global DOF indices of `cell` and the sign applied to each local basis.
    pub fn dof_map(&self, cell: usize) -> (Vec<usize>, Vec<f64>) {
        let m = &self.mesh;
        match self.kind {
            SpaceKind::CG1 => (m.cells()[cell].to_vec(), vec![1.0; 3]),
            SpaceKind::DG0 => (vec![cell], vec![1.0]),
            SpaceKind::RT1 | SpaceKind::N1 => (m.cell_edges(cell).to_vec(), m.cell_edge_signs(cell).to_vec()),
            SpaceKind::VCG1 => {
                let v = m.cells()[cell];
                ((0..6).map(|k| 2 * v[k / 2] + k % 2).collect(), vec![1.0; 6])
            }
        }
    }

    pub fn same_mesh(&self, other: &FunctionSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.same_as(&other.mesh)
    }

    /// Evaluates the local basis of `cell` at barycentric point `bary`.
    pub fn basis(&self, cell: usize, geo: &CellGeometry, bary: [f64; 3]) -> LocalBasis {
        let mut b = LocalBasis {
            n: self.kind.local_dofs(),
            dofs: [0; 6],
            val: [[0.0; 2]; 6],
            grad: [[0.0; 2]; 6],
            div: [0.0; 6],
            rot: [0.0; 6],
        };
        let m = &self.mesh;
        let g = geo.grad_bary;
        match self.kind {
            SpaceKind::CG1 => {
                let v = m.cells()[cell];
                for i in 0..3 {
                    b.dofs[i] = v[i];
                    b.val[i][0] = bary[i];
                    b.grad[i] = g[i].to_array();
                }
            }
            SpaceKind::DG0 => {
                b.dofs[0] = cell;
                b.val[0][0] = 1.0;
            }
            SpaceKind::VCG1 => {
                let v = m.cells()[cell];
                for i in 0..3 {
                    let (kr, kz) = (2 * i, 2 * i + 1);
                    b.dofs[kr] = 2 * v[i];
                    b.dofs[kz] = 2 * v[i] + 1;
                    b.val[kr] = [bary[i], 0.0];
                    b.val[kz] = [0.0, bary[i]];
                    // div(λ e_r) = ∂r λ, rot(λ e_r) = -∂z λ; likewise for e_z.
                    b.div[kr] = g[i].r;
                    b.rot[kr] = -g[i].z;
                    b.div[kz] = g[i].z;
                    b.rot[kz] = g[i].r;
                }
            }
            SpaceKind::RT1 => {
                let x = geo.map(bary);
                let edges = m.cell_edges(cell);
                let signs = m.cell_edge_signs(cell);
                for i in 0..3 {
                    let s = signs[i] / geo.det;
                    let d = x - geo.points[i];
                    b.dofs[i] = edges[i];
                    b.val[i] = [s * d.r, s * d.z];
                    b.div[i] = 2.0 * s;
                }
            }
            SpaceKind::N1 => {
                let edges = m.cell_edges(cell);
                let signs = m.cell_edge_signs(cell);
                for i in 0..3 {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    let s = signs[i];
                    let v = bary[j] * g[k] - bary[k] * g[j];
                    b.dofs[i] = edges[i];
                    b.val[i] = [s * v.r, s * v.z];
                    b.rot[i] = 2.0 * s * g[j].cross(g[k]);
                }
            }
        }
        b
    }

    /// Interpolates a function using the DOF functionals of the space.
    ///
    /// Scalar kinds read `f(x)[0]`. DG0 takes the cell average.
    pub fn interpolate(&self, f: impl Fn(Point2) -> [f64; 2]) -> Field {
        let m = &self.mesh;
        let coeffs = match self.kind {
            SpaceKind::CG1 => m.vertices().iter().map(|&p| f(p)[0]).collect(),
            SpaceKind::VCG1 => m.vertices().iter().flat_map(|&p| f(p)).collect(),
            SpaceKind::DG0 => {
                let q = crate::assembly::Quadrature::triangle();
                (0..m.num_cells())
                    .map(|c| {
                        let geo = m.geometry(c);
                        q.points.iter().zip(&q.weights).map(|(&b, &w)| w * f(geo.map(b))[0]).sum()
                    })
                    .collect()
            }
            SpaceKind::RT1 | SpaceKind::N1 => {
                let q = crate::assembly::Quadrature::edge();
                (0..m.num_edges())
                    .map(|e| {
                        let [a, b] = m.edges()[e];
                        let (pa, pb) = (m.vertices()[a], m.vertices()[b]);
                        let dir = if self.kind == SpaceKind::RT1 { m.edge_normal(e) } else { m.edge_tangent(e) };
                        let len = m.edge_length(e);
                        q.points
                            .iter()
                            .zip(&q.weights)
                            .map(|(&s, &w)| {
                                let v = f((1.0 - s) * pa + s * pb);
                                w * len * (v[0] * dir.r + v[1] * dir.z)
                            })
                            .sum()
                    })
                    .collect()
            }
        };
        Field { space: self.clone(), coeffs }
    }

    pub fn zero(&self) -> Field {
        Field { space: self.clone(), coeffs: vec![0.0; self.ndofs()] }
    }
}

/// Value of a field and its cellwise derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldValue {
    pub val: [f64; 2],
    pub grad: [f64; 2],
    pub div: f64,
    pub rot: f64,
}

impl FieldValue {
    pub fn scalar(&self) -> f64 {
        self.val[0]
    }

    pub fn vector(&self) -> Point2 {
        Point2::new(self.val[0], self.val[1])
    }
}

/// Result of a pointwise evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Vector(Point2),
}

impl Value {
    pub fn as_scalar(self) -> Option<f64> {
        match self {
            Value::Scalar(x) => Some(x),
            Value::Vector(_) => None,
        }
    }

    pub fn as_vector(self) -> Option<Point2> {
        match self {
            Value::Vector(v) => Some(v),
            Value::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    /// `∇` of a scalar.
    Grad,
    /// `∇⊥ = (-∂z, ∂r)` of a scalar.
    PerpGrad,
    /// `∇·` of a vector.
    Div,
    /// `∇⊥· v = ∂r v_z - ∂z v_r` of a vector.
    Rot,
}

/// Coefficients bound to a space.
#[derive(Debug, Clone)]
pub struct Field {
    pub space: FunctionSpace,
    pub coeffs: Vec<f64>,
}

impl Field {
    pub fn new(space: FunctionSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndofs() {
            return Err(Error::InvalidMesh(format!(
                "{} coefficients for a {} space with {} DOFs",
                coeffs.len(),
                space.kind(),
                space.ndofs()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { cell: i });
        }
        Ok(Self { space, coeffs })
    }

    pub fn kind(&self) -> SpaceKind {
        self.space.kind()
    }

    pub fn mesh(&self) -> &Mesh2D {
        self.space.mesh()
    }

    pub fn expect_kind(&self, allowed: &[SpaceKind]) -> Result<()> {
        if allowed.contains(&self.kind()) {
            Ok(())
        } else {
            Err(Error::KindMismatch { expected: allowed.to_vec(), found: self.kind() })
        }
    }

    /// Value and derivatives at barycentric point `bary` of `cell`.
    pub fn eval_at(&self, cell: usize, geo: &CellGeometry, bary: [f64; 3]) -> FieldValue {
        let b = self.space.basis(cell, geo, bary);
        let mut out = FieldValue::default();
        for k in 0..b.n {
            let c = self.coeffs[b.dofs[k]];
            out.val[0] += c * b.val[k][0];
            out.val[1] += c * b.val[k][1];
            out.grad[0] += c * b.grad[k][0];
            out.grad[1] += c * b.grad[k][1];
            out.div += c * b.div[k];
            out.rot += c * b.rot[k];
        }
        out
    }

    pub fn eval_cell(&self, cell: usize, bary: [f64; 3]) -> FieldValue {
        self.eval_at(cell, &self.mesh().geometry(cell), bary)
    }

    pub fn eval_point(&self, p: Point2) -> FieldValue {
        let loc = self.mesh().locate_point(p);
        self.eval_cell(loc.cell, loc.bary)
    }

    /// Elementwise linear combination `a self + b other` on the same space.
    pub fn axpby(&self, a: f64, b: f64, other: &Field) -> Result<Field> {
        if self.kind() != other.kind() || !self.space.same_mesh(&other.space) {
            return Err(Error::MeshMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect();
        Ok(Field { space: self.space.clone(), coeffs })
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Cell average of the field (scalar in component 0).
    pub fn cell_average(&self, cell: usize) -> [f64; 2] {
        // Every basis function is affine on a cell, so the centroid value is the mean.
        self.eval_cell(cell, [1.0 / 3.0; 3]).val
    }
}

/// Evaluates `field` at a located point.
pub fn eval_field(field: &Field, loc: &PointLocation) -> Result<Value> {
    if loc.cell >= field.mesh().num_cells() {
        return Err(Error::MeshMismatch);
    }
    let v = field.eval_cell(loc.cell, loc.bary);
    Ok(if field.kind().is_vector() { Value::Vector(v.vector()) } else { Value::Scalar(v.scalar()) })
}

/// Cellwise derivative of the discrete field at a located point.
pub fn eval_strong_derivative(field: &Field, loc: &PointLocation, op: Derivative) -> Result<Value> {
    use SpaceKind::*;
    let defined = matches!(
        (field.kind(), op),
        (CG1, Derivative::Grad)
            | (CG1, Derivative::PerpGrad)
            | (RT1, Derivative::Div)
            | (N1, Derivative::Rot)
            | (VCG1, Derivative::Div)
            | (VCG1, Derivative::Rot)
    );
    if !defined {
        return Err(Error::UndefinedDerivative(match op {
            Derivative::Grad => "gradient",
            Derivative::PerpGrad => "perpendicular gradient",
            Derivative::Div => "divergence",
            Derivative::Rot => "perpendicular divergence",
        }));
    }
    if loc.cell >= field.mesh().num_cells() {
        return Err(Error::MeshMismatch);
    }
    let v = field.eval_cell(loc.cell, loc.bary);
    Ok(match op {
        Derivative::Grad => Value::Vector(Point2::new(v.grad[0], v.grad[1])),
        Derivative::PerpGrad => Value::Vector(Point2::new(-v.grad[1], v.grad[0])),
        Derivative::Div => Value::Scalar(v.div),
        Derivative::Rot => Value::Scalar(v.rot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, perturb_mesh};
    use std::collections::HashMap;

    fn square() -> MeshRef {
        Arc::new(build_structured_mesh(1.0, 2.0, 0.0, 1.0, 1, 1).unwrap())
    }

    fn loc(cell: usize, bary: [f64; 3]) -> PointLocation {
        PointLocation { cell, bary, status: crate::mesh::LocationStatus::Inside }
    }

    #[test]
    fn dof_counts() {
        let m = square();
        assert_eq!(build_space(&m, SpaceKind::RT1).ndofs(), 5);
        assert_eq!(build_space(&m, SpaceKind::N1).ndofs(), 5);
        assert_eq!(build_space(&m, SpaceKind::CG1).ndofs(), 4);
        assert_eq!(build_space(&m, SpaceKind::DG0).ndofs(), 2);
        assert_eq!(build_space(&m, SpaceKind::VCG1).ndofs(), 8);
    }

    #[test]
    fn cg1_gradient_by_hand() {
        let v = vec![Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(1.0, 1.0)];
        let m = Arc::new(Mesh2D::new(v, vec![[0, 1, 2]], vec![1], &HashMap::new()).unwrap());
        let psi = build_space(&m, SpaceKind::CG1).interpolate(|p| [p.r * p.r, 0.0]);
        assert_eq!(psi.coeffs, vec![1.0, 4.0, 1.0]);
        let l = loc(0, [0.2, 0.3, 0.5]);
        let g = eval_strong_derivative(&psi, &l, Derivative::Grad).unwrap().as_vector().unwrap();
        assert!((g.r - 3.0).abs() < 1e-14 && g.z.abs() < 1e-14);
        let p = eval_strong_derivative(&psi, &l, Derivative::PerpGrad).unwrap().as_vector().unwrap();
        assert!(p.r.abs() < 1e-14 && (p.z - 3.0).abs() < 1e-14);
        assert!(eval_strong_derivative(&psi, &l, Derivative::Div).is_err());
    }

    #[test]
    fn edge_spaces_reproduce_constants() {
        let m = Arc::new(perturb_mesh(&build_structured_mesh(1.0, 2.0, 0.0, 1.0, 3, 3).unwrap(), 0.05).unwrap());
        for kind in [SpaceKind::RT1, SpaceKind::N1, SpaceKind::VCG1] {
            let f = build_space(&m, kind).interpolate(|_| [0.0, 2.0]);
            for c in 0..m.num_cells() {
                for bary in [[0.2, 0.3, 0.5], [0.6, 0.3, 0.1]] {
                    let v = f.eval_cell(c, bary);
                    assert!(v.val[0].abs() < 1e-12 && (v.val[1] - 2.0).abs() < 1e-12, "{kind}");
                    assert!(v.div.abs() < 1e-12 && v.rot.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dg0_is_cellwise_constant() {
        let m = square();
        let f = Field::new(build_space(&m, SpaceKind::DG0), vec![3.0, -1.0]).unwrap();
        assert_eq!(eval_field(&f, &loc(1, [0.1, 0.2, 0.7])).unwrap(), Value::Scalar(-1.0));
        assert!(eval_strong_derivative(&f, &loc(0, [0.3; 3]), Derivative::Grad).is_err());
    }

    #[test]
    fn single_basis_dof_functionals() {
        // Global DOF functionals applied to the signed local basis give the Kronecker delta.
        let m = Arc::new(perturb_mesh(&build_structured_mesh(1.0, 2.0, 0.0, 1.0, 2, 2).unwrap(), 0.05).unwrap());
        for kind in [SpaceKind::RT1, SpaceKind::N1] {
            let space = build_space(&m, kind);
            for c in 0..m.num_cells() {
                let geo = m.geometry(c);
                for i in 0..3 {
                    for e in 0..3 {
                        let (j, k) = ((e + 1) % 3, (e + 2) % 3);
                        let mut bary = [0.0; 3];
                        bary[j] = 0.5;
                        bary[k] = 0.5;
                        let b = space.basis(c, &geo, bary);
                        let edge = m.cell_edges(c)[e];
                        let dir = if kind == SpaceKind::RT1 { m.edge_normal(edge) } else { m.edge_tangent(edge) };
                        let flux = (b.val[i][0] * dir.r + b.val[i][1] * dir.z) * m.edge_length(edge);
                        let expected = if i == e { 1.0 } else { 0.0 };
                        assert!((flux - expected).abs() < 1e-12, "{kind} cell {c} basis {i} edge {e}");
                    }
                }
            }
        }
    }
}
