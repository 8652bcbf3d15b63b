use super::{CsrMatrix, EdgeQuadrature, Quadrature, TripletBuilder};
use crate::mesh::{BoundaryEdge, CellGeometry, Point2};
use crate::spaces::{FunctionSpace, LocalBasis};
use crate::{Error, Result};

/// Metric weight of a mass matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    One,
    R,
    InvR,
}

impl Weight {
    pub fn at(self, x: Point2) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::R => x.r,
            Weight::InvR => 1.0 / x.r,
        }
    }
}

/// Area quadrature point handed to integrand callbacks.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<'a> {
    pub cell: usize,
    pub bary: [f64; 3],
    pub x: Point2,
    pub geo: &'a CellGeometry,
}

/// Boundary quadrature point; `bary` refers to the adjacent cell.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint<'a> {
    pub edge: &'a BoundaryEdge,
    pub bary: [f64; 3],
    pub x: Point2,
    pub geo: &'a CellGeometry,
    /// Counterclockwise unit tangent of the boundary, `n⊥ = (-n_z, n_r)`.
    pub tangent: Point2,
}

/// Integrand that is linear in the test function `v` and its first
/// derivatives: `val·v + grad·∇v + div ∇·v + rot ∇⊥·v`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TestCoeffs {
    pub val: [f64; 2],
    pub grad: [f64; 2],
    pub div: f64,
    pub rot: f64,
}

impl TestCoeffs {
    pub fn value(v: [f64; 2]) -> Self {
        Self { val: v, ..Self::default() }
    }

    pub fn scalar(s: f64) -> Self {
        Self::value([s, 0.0])
    }

    fn apply(&self, b: &LocalBasis, k: usize) -> f64 {
        self.val[0] * b.val[k][0]
            + self.val[1] * b.val[k][1]
            + self.grad[0] * b.grad[k][0]
            + self.grad[1] * b.grad[k][1]
            + self.div * b.div[k]
            + self.rot * b.rot[k]
    }

    fn is_finite(&self) -> bool {
        self.val.iter().chain(&self.grad).all(|x| x.is_finite()) && self.div.is_finite() && self.rot.is_finite()
    }
}

/// `A_ij = ∫ mass(x) φ_i·φ_j + stiff(x) ∇φ_i·∇φ_j dA`.
pub fn assemble_matrix(space: &FunctionSpace, coeff: impl Fn(Point2) -> (f64, f64)) -> CsrMatrix {
    let mesh = space.mesh();
    let q = Quadrature::triangle();
    let mut t = TripletBuilder::new(space.ndofs());
    for c in 0..mesh.num_cells() {
        let geo = mesh.geometry(c);
        let mut local = [[0.0; 6]; 6];
        let mut dofs = [0usize; 6];
        let mut n = 0;
        for (&bary, &w) in q.points.iter().zip(&q.weights) {
            let x = geo.map(bary);
            let (m, s) = coeff(x);
            let b = space.basis(c, &geo, bary);
            n = b.n;
            dofs = b.dofs;
            let dw = w * geo.area;
            for i in 0..b.n {
                for j in 0..b.n {
                    let vv = b.val[i][0] * b.val[j][0] + b.val[i][1] * b.val[j][1];
                    let gg = b.grad[i][0] * b.grad[j][0] + b.grad[i][1] * b.grad[j][1];
                    local[i][j] += dw * (m * vv + s * gg);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                t.add(dofs[i], dofs[j], local[i][j]);
            }
        }
    }
    t.build()
}

/// `M_ij = ∫ w(r) φ_i·φ_j dA`.
pub fn assemble_weighted_mass(space: &FunctionSpace, weight: Weight) -> CsrMatrix {
    assemble_matrix(space, |x| (weight.at(x), 0.0))
}

/// `b_i = ∫ integrand(q) applied to φ_i dA`. Non-finite integrand values
/// abort with the cell index.
pub fn assemble_rhs(
    space: &FunctionSpace,
    mut integrand: impl FnMut(&QuadPoint) -> Result<TestCoeffs>,
) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let q = Quadrature::triangle();
    let mut b = vec![0.0; space.ndofs()];
    for c in 0..mesh.num_cells() {
        let geo = mesh.geometry(c);
        for (&bary, &w) in q.points.iter().zip(&q.weights) {
            let x = geo.map(bary);
            let coeffs = integrand(&QuadPoint { cell: c, bary, x, geo: &geo })?;
            if !coeffs.is_finite() {
                return Err(Error::NonFinite { cell: c });
            }
            let basis = space.basis(c, &geo, bary);
            let dw = w * geo.area;
            for k in 0..basis.n {
                b[basis.dofs[k]] += dw * coeffs.apply(&basis, k);
            }
        }
    }
    Ok(b)
}

/// `b_i = ∫ f(x, cell) · φ_i dA` for a value-only integrand.
pub fn assemble_linear_form(space: &FunctionSpace, f: impl Fn(Point2, usize) -> [f64; 2]) -> Result<Vec<f64>> {
    assemble_rhs(space, |q| Ok(TestCoeffs::value(f(q.x, q.cell))))
}

/// `b_i = ∮ integrand(p) · tr φ_i dS` over all boundary edges.
pub fn assemble_boundary_rhs(
    space: &FunctionSpace,
    mut integrand: impl FnMut(&BoundaryPoint) -> Result<[f64; 2]>,
) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let q = EdgeQuadrature::gauss3();
    let mut b = vec![0.0; space.ndofs()];
    for be in mesh.boundary_edges() {
        let geo = mesh.geometry(be.cell);
        let (i, j) = ((be.local + 1) % 3, (be.local + 2) % 3);
        let len = mesh.edge_length(be.edge);
        let tangent = be.normal.perp();
        for (&s, &w) in q.points.iter().zip(&q.weights) {
            let mut bary = [0.0; 3];
            bary[i] = 1.0 - s;
            bary[j] = s;
            let x = geo.map(bary);
            let v = integrand(&BoundaryPoint { edge: be, bary, x, geo: &geo, tangent })?;
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::NonFinite { cell: be.cell });
            }
            let basis = space.basis(be.cell, &geo, bary);
            for k in 0..basis.n {
                b[basis.dofs[k]] += w * len * (v[0] * basis.val[k][0] + v[1] * basis.val[k][1]);
            }
        }
    }
    Ok(b)
}

/// `b_i = ∮ f(x, edge) · tr φ_i dS` for a plain callback.
pub fn assemble_boundary_form(
    space: &FunctionSpace,
    f: impl Fn(Point2, &BoundaryEdge) -> [f64; 2],
) -> Result<Vec<f64>> {
    assemble_boundary_rhs(space, |p| Ok(f(p.x, p.edge)))
}
