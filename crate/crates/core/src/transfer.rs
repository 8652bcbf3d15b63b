//! Projection of `(Ψ, f)` onto a target mesh along paths A, B and C.
//!
//! Every projection is written as `⟨r ω v, X⟩ = rhs(ω v)` with `ω = 1` for
//! [`RWeight::Multiply`] and `ω = 1/r` for [`RWeight::Divide`]; derivatives of
//! `ω v` in weak forms are expanded with the product rule at quadrature
//! points. Sign conventions: `∇⊥ = (-∂z, ∂r)`, `v⊥ = (-v_z, v_r)`,
//! `∇⊥·v = ∂r v_z - ∂z v_r`, `n⊥ = (-n_z, n_r)` (the counterclockwise boundary
//! tangent) and `J_t = ∂z B_r - ∂r B_z = -∇⊥·B_p`.

use std::cell::Cell;
use std::str::FromStr;

use crate::assembly::{
    assemble_boundary_rhs, assemble_rhs, assemble_weighted_mass, solve_spd, BoundaryPoint, QuadPoint, TestCoeffs,
    Weight, DEFAULT_TOL,
};
use crate::equilibria::{self, EquilibriumInput};
use crate::mesh::{Mesh2D, MeshRef, Point2};
use crate::spaces::{build_space, Field, FieldValue, FunctionSpace, SpaceKind};
use crate::{Error, Result};

/// Largest tolerated share of cross-mesh evaluation points outside the source mesh.
pub const MAX_OUTSIDE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathKind {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RWeight {
    Multiply,
    Divide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceEval {
    /// Target and source mesh coincide; DOFs are reused.
    Aligned,
    /// Source fields are located and evaluated at target points.
    Cross,
}

impl FromStr for PathKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(PathKind::A),
            "B" | "b" => Ok(PathKind::B),
            "C" | "c" => Ok(PathKind::C),
            other => Err(Error::Config(format!("unknown path {other:?}; expected A, B or C"))),
        }
    }
}

impl FromStr for RWeight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "multiply" => Ok(RWeight::Multiply),
            "divide" => Ok(RWeight::Divide),
            other => Err(Error::Config(format!("unknown rweight {other:?}; expected multiply or divide"))),
        }
    }
}

impl FromStr for SourceEval {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "aligned" => Ok(SourceEval::Aligned),
            "cross" => Ok(SourceEval::Cross),
            other => Err(Error::Config(format!("unknown source evaluation {other:?}; expected aligned or cross"))),
        }
    }
}

impl std::fmt::Display for PathKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::fmt::Display for RWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RWeight::Multiply => "multiply",
            RWeight::Divide => "divide",
        })
    }
}

impl std::fmt::Display for SourceEval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceEval::Aligned => "aligned",
            SourceEval::Cross => "cross",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    pub path: PathKind,
    pub rweight: RWeight,
    pub solver_tol: f64,
    pub source_eval: SourceEval,
    /// Drops the boundary flux `g₁` from path B's weak divergence. Only
    /// useful as a negative control.
    pub zero_boundary_flux: bool,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            path: PathKind::A,
            rweight: RWeight::Multiply,
            solver_tol: DEFAULT_TOL,
            source_eval: SourceEval::Aligned,
            zero_boundary_flux: false,
        }
    }
}

impl TransferConfig {
    pub fn new(path: PathKind) -> Self {
        Self { path, ..Self::default() }
    }

    pub fn with_rweight(mut self, rweight: RWeight) -> Self {
        self.rweight = rweight;
        self
    }

    pub fn with_source_eval(mut self, source_eval: SourceEval) -> Self {
        self.source_eval = source_eval;
        self
    }

    fn omega(&self, x: Point2) -> f64 {
        match self.rweight {
            RWeight::Multiply => 1.0,
            RWeight::Divide => 1.0 / x.r,
        }
    }

    /// `∇ω`.
    fn grad_omega(&self, x: Point2) -> Point2 {
        match self.rweight {
            RWeight::Multiply => Point2::default(),
            RWeight::Divide => Point2::new(-1.0 / (x.r * x.r), 0.0),
        }
    }

    /// `h = r ω`, the weight carried by every left-hand side.
    fn h(&self, x: Point2) -> f64 {
        x.r * self.omega(x)
    }

    /// `∇h`.
    fn grad_h(&self) -> Point2 {
        match self.rweight {
            RWeight::Multiply => Point2::new(1.0, 0.0),
            RWeight::Divide => Point2::default(),
        }
    }

    fn mass_weight(&self) -> Weight {
        match self.rweight {
            RWeight::Multiply => Weight::R,
            RWeight::Divide => Weight::One,
        }
    }
}

/// Space kinds of `[B_p, B_t, J_p, J_t, D_b, F_p, F_t]` for a path.
pub fn path_spaces(path: PathKind) -> [SpaceKind; 7] {
    use SpaceKind::*;
    match path {
        PathKind::A => [RT1, DG0, N1, CG1, DG0, RT1, DG0],
        PathKind::B => [N1, CG1, RT1, DG0, CG1, N1, CG1],
        PathKind::C => [VCG1, CG1, VCG1, CG1, CG1, VCG1, CG1],
    }
}

pub const FIELD_NAMES: [&str; 7] = ["Bp", "Bt", "Jp", "Jt", "Db", "Fp", "Ft"];

#[derive(Debug, Clone)]
pub struct TransferResult {
    pub bp: Field,
    pub bt: Field,
    pub jp: Field,
    pub jt: Field,
    pub db: Field,
    pub fp: Field,
    pub ft: Field,
    pub config: TransferConfig,
    /// Share of cross-mesh evaluation points that fell outside the source mesh.
    pub outside_fraction: f64,
}

impl TransferResult {
    pub fn fields(&self) -> [(&'static str, &Field); 7] {
        [
            ("Bp", &self.bp),
            ("Bt", &self.bt),
            ("Jp", &self.jp),
            ("Jt", &self.jt),
            ("Db", &self.db),
            ("Fp", &self.fp),
            ("Ft", &self.ft),
        ]
    }

    /// Checks the space-kind table for the configured path.
    pub fn check_spaces(&self) -> Result<()> {
        for ((_, f), kind) in self.fields().iter().zip(path_spaces(self.config.path)) {
            f.expect_kind(&[kind])?;
        }
        Ok(())
    }
}

/// Evaluates a source CG1 field on the target mesh, either by DOF reuse or
/// by point location, counting points that land outside the source.
#[derive(Debug)]
pub struct Sampler<'a> {
    field: &'a Field,
    on_target: bool,
    total: Cell<usize>,
    outside: Cell<usize>,
}

impl<'a> Sampler<'a> {
    pub fn new(field: &'a Field, target: &Mesh2D) -> Self {
        Self { field, on_target: field.mesh().same_as(target), total: Cell::new(0), outside: Cell::new(0) }
    }

    pub fn field(&self) -> &Field {
        self.field
    }

    pub fn is_on_target(&self) -> bool {
        self.on_target
    }

    pub fn at(&self, cell: usize, bary: [f64; 3], x: Point2) -> FieldValue {
        if self.on_target {
            return self.field.eval_cell(cell, bary);
        }
        let loc = self.field.mesh().locate_point(x);
        self.total.set(self.total.get() + 1);
        if loc.is_outside() {
            self.outside.set(self.outside.get() + 1);
        }
        self.field.eval_cell(loc.cell, loc.bary)
    }

    pub fn at_quad(&self, q: &QuadPoint) -> FieldValue {
        self.at(q.cell, q.bary, q.x)
    }

    /// Value at target vertex `v`, located on the source if needed.
    pub fn at_vertex(&self, target: &Mesh2D, v: usize) -> f64 {
        if self.on_target {
            self.field.coeffs[v]
        } else {
            self.field.eval_point(target.vertices()[v]).scalar()
        }
    }

    pub fn outside_fraction(&self) -> f64 {
        let t = self.total.get();
        if t == 0 {
            0.0
        } else {
            self.outside.get() as f64 / t as f64
        }
    }

    fn check(&self) -> Result<()> {
        let frac = self.outside_fraction();
        if frac > MAX_OUTSIDE_FRACTION {
            Err(Error::OutsideHull { fraction: 100.0 * frac })
        } else {
            Ok(())
        }
    }
}

/// Trace of `Ψ` on the target boundary: linear on every boundary edge,
/// interpolating the source values at the target boundary vertices.
///
/// The same trace feeds the boundary term of path B's `B_p` and the flux
/// `g₁` of its weak divergence, which is what makes the two cancel exactly.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(psi: &Field, target: &Mesh2D) -> Self {
        let s = Sampler::new(psi, target);
        let mut values = vec![0.0; target.num_vertices()];
        for b in target.boundary_edges() {
            for v in target.edges()[b.edge] {
                values[v] = s.at_vertex(target, v);
            }
        }
        Self { values }
    }

    /// Trace value and its derivative along `n⊥` at a boundary point.
    fn at(&self, mesh: &Mesh2D, p: &BoundaryPoint) -> (f64, f64) {
        let l = p.edge.local;
        let cell = mesh.cells()[p.edge.cell];
        let (i, j) = ((l + 1) % 3, (l + 2) % 3);
        let (a, b) = (self.values[cell[i]], self.values[cell[j]]);
        let value = p.bary[i] * a + p.bary[j] * b;
        // Local edge i -> j runs counterclockwise along the boundary, i.e. along n⊥.
        (value, (b - a) / mesh.edge_length(p.edge.edge))
    }
}

/// Source data as seen from the target mesh.
#[derive(Debug, Clone)]
pub struct Sources {
    /// CG1 fields on the target (aligned input or auxiliary projections).
    psi_target: Option<Field>,
    f_target: Option<Field>,
    eq: EquilibriumInput,
    target: MeshRef,
    trace: BoundaryTrace,
    outside_fraction: f64,
}

impl Sources {
    pub fn prepare(config: &TransferConfig, eq: &EquilibriumInput, target: &MeshRef) -> Result<Self> {
        equilibria::validate(eq)?;
        let aligned = eq.mesh.same_as(target);
        if config.source_eval == SourceEval::Aligned && !aligned {
            return Err(Error::MeshMismatch);
        }
        let trace = BoundaryTrace::new(&eq.psi, target);
        let mut out = Self {
            psi_target: None,
            f_target: None,
            eq: eq.clone(),
            target: target.clone(),
            trace,
            outside_fraction: 0.0,
        };
        if aligned && config.source_eval == SourceEval::Aligned {
            let cg = build_space(target, SpaceKind::CG1);
            out.psi_target = Some(Field::new(cg.clone(), eq.psi.coeffs.clone())?);
            out.f_target = Some(Field::new(cg, eq.f.coeffs.clone())?);
        } else if config.path != PathKind::B {
            // Strong projections work on auxiliary fields, built by r-weighted L2 projection.
            let (psi, fp) = auxiliary_projection(&eq.psi, target, config.solver_tol)?;
            let (f, ff) = auxiliary_projection(&eq.f, target, config.solver_tol)?;
            out.psi_target = Some(psi);
            out.f_target = Some(f);
            out.outside_fraction = fp.max(ff);
        }
        Ok(out)
    }

    /// CG1 `Ψ` on the target, projecting if the input lives elsewhere.
    fn psi_on_target(&self, tol: f64) -> Result<Field> {
        match &self.psi_target {
            Some(f) => Ok(f.clone()),
            None => Ok(auxiliary_projection(&self.eq.psi, &self.target, tol)?.0),
        }
    }

    fn f_on_target(&self, tol: f64) -> Result<Field> {
        match &self.f_target {
            Some(f) => Ok(f.clone()),
            None => Ok(auxiliary_projection(&self.eq.f, &self.target, tol)?.0),
        }
    }

    fn psi_sampler(&self) -> Sampler<'_> {
        Sampler::new(self.psi_target.as_ref().unwrap_or(&self.eq.psi), &self.target)
    }

    fn f_sampler(&self) -> Sampler<'_> {
        Sampler::new(self.f_target.as_ref().unwrap_or(&self.eq.f), &self.target)
    }
}

/// `⟨r η, u⟩ = ⟨r η, u_src⟩` on the target CG1 space. Returns the field and
/// the share of quadrature points outside the source mesh.
pub fn auxiliary_projection(src: &Field, target: &MeshRef, tol: f64) -> Result<(Field, f64)> {
    let cg = build_space(target, SpaceKind::CG1);
    let s = Sampler::new(src, target);
    let rhs = assemble_rhs(&cg, |q| Ok(TestCoeffs::scalar(q.x.r * s.at_quad(q).scalar())))?;
    s.check()?;
    let frac = s.outside_fraction();
    Ok((project(&cg, Weight::R, &rhs, tol)?, frac))
}

fn project(space: &FunctionSpace, weight: Weight, rhs: &[f64], tol: f64) -> Result<Field> {
    let m = assemble_weighted_mass(space, weight);
    Field::new(space.clone(), solve_spd(&m, rhs, tol)?)
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn scale(s: f64, v: [f64; 2]) -> [f64; 2] {
    [s * v[0], s * v[1]]
}

fn space_for(target: &MeshRef, path: PathKind, slot: usize) -> FunctionSpace {
    build_space(target, path_spaces(path)[slot])
}

fn bp_with(config: &TransferConfig, src: &Sources) -> Result<Field> {
    let space = space_for(&src.target, config.path, 0);
    let tol = config.solver_tol;
    let rhs = match config.path {
        PathKind::A | PathKind::C => {
            let psi = src.psi_on_target(tol)?;
            assemble_rhs(&space, |q| {
                let g = psi.eval_at(q.cell, q.geo, q.bary).grad;
                Ok(TestCoeffs::value(scale(config.omega(q.x), perp(g))))
            })?
        }
        PathKind::B => {
            // ⟨r ω Σ, B⟩ = -⟨∇⊥·(ω Σ), Ψ⟩ + ∮ Ψ ω Σ·n⊥
            let s = src.psi_sampler();
            let mut rhs = assemble_rhs(&space, |q| {
                let psi = s.at_quad(q).scalar();
                let pg = config.grad_omega(q.x).perp();
                Ok(TestCoeffs { val: [-psi * pg.r, -psi * pg.z], rot: -psi * config.omega(q.x), ..Default::default() })
            })?;
            s.check()?;
            let mesh = src.target.as_ref();
            let b = assemble_boundary_rhs(&space, |p| {
                let (psi, _) = src.trace.at(mesh, p);
                Ok((psi * config.omega(p.x) * p.tangent).to_array())
            })?;
            add(&mut rhs, &b);
            rhs
        }
    };
    project(&space, config.mass_weight(), &rhs, tol)
}

fn bt_with(config: &TransferConfig, src: &Sources) -> Result<Field> {
    let space = space_for(&src.target, config.path, 1);
    let s = src.f_sampler();
    let rhs = assemble_rhs(&space, |q| Ok(TestCoeffs::scalar(config.omega(q.x) * s.at_quad(q).scalar())))?;
    s.check()?;
    project(&space, config.mass_weight(), &rhs, config.solver_tol)
}

/// Poloidal field `B_p = ∇⊥Ψ / r` in the path's space.
pub fn compute_bp(config: &TransferConfig, eq: &EquilibriumInput, target: &MeshRef) -> Result<Field> {
    bp_with(config, &Sources::prepare(config, eq, target)?)
}

/// Toroidal field `B_t = f / r` in the path's space.
pub fn compute_bt(config: &TransferConfig, eq: &EquilibriumInput, target: &MeshRef) -> Result<Field> {
    bt_with(config, &Sources::prepare(config, eq, target)?)
}

/// Poloidal current `J_p = ∇⊥(r B_t) / r`.
pub fn compute_jp(config: &TransferConfig, bt: &Field) -> Result<Field> {
    let target = bt.space.mesh_ref().clone();
    let space = space_for(&target, config.path, 2);
    let rhs = match config.path {
        PathKind::A => {
            // Weak, from DG0 B_t: ⟨r ω Σ, J⟩ = -⟨∇⊥·(ω Σ), r B_t⟩ + ∮ r B_t ω Σ·n⊥
            bt.expect_kind(&[SpaceKind::DG0])?;
            let mut rhs = assemble_rhs(&space, |q| {
                let g = q.x.r * bt.coeffs[q.cell];
                let pg = config.grad_omega(q.x).perp();
                Ok(TestCoeffs { val: [-g * pg.r, -g * pg.z], rot: -g * config.omega(q.x), ..Default::default() })
            })?;
            let b = assemble_boundary_rhs(&space, |p| {
                let g = p.x.r * bt.coeffs[p.edge.cell];
                Ok((g * config.omega(p.x) * p.tangent).to_array())
            })?;
            add(&mut rhs, &b);
            rhs
        }
        PathKind::B | PathKind::C => {
            // Strong: ∇⊥(r B_t) = B_t e_z + r ∇⊥B_t.
            bt.expect_kind(&[SpaceKind::CG1])?;
            assemble_rhs(&space, |q| {
                let v = bt.eval_at(q.cell, q.geo, q.bary);
                let curl = [-q.x.r * v.grad[1], v.scalar() + q.x.r * v.grad[0]];
                Ok(TestCoeffs::value(scale(config.omega(q.x), curl)))
            })?
        }
    };
    project(&space, config.mass_weight(), &rhs, config.solver_tol)
}

/// Toroidal current `J_t = -∇⊥·B_p`.
pub fn compute_jt(config: &TransferConfig, bp: &Field) -> Result<Field> {
    let target = bp.space.mesh_ref().clone();
    let space = space_for(&target, config.path, 3);
    let rhs = match config.path {
        PathKind::A => {
            // Weak, from RT1 B_p: ⟨h η, J⟩ = ⟨∇⊥(h η), B⟩ - ∮ h η B·n⊥ with h = r ω.
            bp.expect_kind(&[SpaceKind::RT1])?;
            let gh = config.grad_h().perp();
            let mut rhs = assemble_rhs(&space, |q| {
                let b = bp.eval_at(q.cell, q.geo, q.bary).val;
                let h = config.h(q.x);
                // ∇⊥η·B = ∇η·(B_z, -B_r)
                Ok(TestCoeffs {
                    val: [gh.r * b[0] + gh.z * b[1], 0.0],
                    grad: [h * b[1], -h * b[0]],
                    ..Default::default()
                })
            })?;
            let bnd = assemble_boundary_rhs(&space, |p| {
                let b = bp.eval_at(p.edge.cell, p.geo, p.bary).vector();
                Ok([-config.h(p.x) * b.dot(p.tangent), 0.0])
            })?;
            add(&mut rhs, &bnd);
            rhs
        }
        PathKind::B | PathKind::C => {
            bp.expect_kind(&[if config.path == PathKind::B { SpaceKind::N1 } else { SpaceKind::VCG1 }])?;
            assemble_rhs(&space, |q| {
                let rot = bp.eval_at(q.cell, q.geo, q.bary).rot;
                Ok(TestCoeffs::scalar(-config.h(q.x) * rot))
            })?
        }
    };
    project(&space, config.mass_weight(), &rhs, config.solver_tol)
}

/// Reference currents straight from the sources: `J_p = ∇⊥f / r` in RT1 and
/// `J_t = -∇·(∇Ψ / r)` (weakly) in CG1.
pub fn compute_j_direct(eq: &EquilibriumInput, target: &MeshRef, rweight: RWeight) -> Result<(Field, Field)> {
    let source_eval = if eq.mesh.same_as(target) { SourceEval::Aligned } else { SourceEval::Cross };
    let config = TransferConfig { rweight, source_eval, ..TransferConfig::new(PathKind::A) };
    let src = Sources::prepare(&config, eq, target)?;
    j_direct_with(&config, &src)
}

fn j_direct_with(config: &TransferConfig, src: &Sources) -> Result<(Field, Field)> {
    let tol = config.solver_tol;
    let f = src.f_on_target(tol)?;
    let psi = src.psi_on_target(tol)?;
    let rt = build_space(&src.target, SpaceKind::RT1);
    let rhs = assemble_rhs(&rt, |q| {
        let g = f.eval_at(q.cell, q.geo, q.bary).grad;
        Ok(TestCoeffs::value(scale(config.omega(q.x), perp(g))))
    })?;
    let jp = project(&rt, config.mass_weight(), &rhs, tol)?;

    // ⟨h η, J⟩ = ⟨∇(h η), ∇Ψ / r⟩ - ∮ ω η n·∇Ψ
    let cg = build_space(&src.target, SpaceKind::CG1);
    let gh = config.grad_h();
    let mut rhs = assemble_rhs(&cg, |q| {
        let g = psi.eval_at(q.cell, q.geo, q.bary).grad;
        let g = scale(1.0 / q.x.r, g);
        let h = config.h(q.x);
        Ok(TestCoeffs { val: [gh.r * g[0] + gh.z * g[1], 0.0], grad: scale(h, g), ..Default::default() })
    })?;
    let bnd = assemble_boundary_rhs(&cg, |p| {
        let g = psi.eval_at(p.edge.cell, p.geo, p.bary).grad;
        Ok([-config.omega(p.x) * (p.edge.normal.r * g[0] + p.edge.normal.z * g[1]), 0.0])
    })?;
    add(&mut rhs, &bnd);
    let jt = project(&cg, config.mass_weight(), &rhs, tol)?;
    Ok((jp, jt))
}

/// Divergence `D_b = ∇·(r B_p) / r`. Path B uses the weak form with the
/// boundary flux `g₁ = n·B = -(1/r) ∂Ψ/∂n⊥` taken from the `Ψ` trace, which
/// must then be supplied.
pub fn compute_divergence(config: &TransferConfig, bp: &Field, psi_trace: Option<&BoundaryTrace>) -> Result<Field> {
    let target = bp.space.mesh_ref().clone();
    let space = space_for(&target, config.path, 4);
    let rhs = match config.path {
        PathKind::A | PathKind::C => {
            bp.expect_kind(&[if config.path == PathKind::A { SpaceKind::RT1 } else { SpaceKind::VCG1 }])?;
            assemble_rhs(&space, |q| {
                let v = bp.eval_at(q.cell, q.geo, q.bary);
                Ok(TestCoeffs::scalar(config.omega(q.x) * (v.val[0] + q.x.r * v.div)))
            })?
        }
        PathKind::B => {
            // ⟨r ω η, D⟩ = -⟨r ∇(ω η), B⟩ + ∮ r ω η g₁
            bp.expect_kind(&[SpaceKind::N1])?;
            let trace = psi_trace.ok_or(Error::MissingInput("flux trace for the weak divergence"))?;
            let mut rhs = assemble_rhs(&space, |q| {
                let b = bp.eval_at(q.cell, q.geo, q.bary).val;
                let go = config.grad_omega(q.x);
                let r = q.x.r;
                Ok(TestCoeffs {
                    val: [-r * (go.r * b[0] + go.z * b[1]), 0.0],
                    grad: scale(-r * config.omega(q.x), b),
                    ..Default::default()
                })
            })?;
            if !config.zero_boundary_flux {
                let mesh = target.as_ref();
                let bnd = assemble_boundary_rhs(&space, |p| {
                    let (_, ds) = trace.at(mesh, p);
                    // r ω g₁ = -ω ∂Ψ/∂n⊥
                    Ok([-config.omega(p.x) * ds, 0.0])
                })?;
                add(&mut rhs, &bnd);
            }
            rhs
        }
    };
    project(&space, config.mass_weight(), &rhs, config.solver_tol)
}

/// Lorentz force `[B×J]_p = -B_t J_p⊥ + J_t B_p⊥`, `[B×J]_t = B_p·J_p⊥`.
///
/// Path C works from `B` alone: `[B×J]_p = (1/r) B_t ∇(r B_t) + J_t B_p⊥` and
/// `[B×J]_t = -(1/r) B_p·∇(r B_t)` with `J_t = -∇⊥·B_p`.
pub fn compute_lorentz(
    config: &TransferConfig,
    bp: &Field,
    bt: &Field,
    jp: Option<&Field>,
    jt: Option<&Field>,
) -> Result<(Field, Field)> {
    let kinds = path_spaces(config.path);
    bp.expect_kind(&[kinds[0]])?;
    bt.expect_kind(&[kinds[1]])?;
    let target = bp.space.mesh_ref().clone();
    let fp_space = space_for(&target, config.path, 5);
    let ft_space = space_for(&target, config.path, 6);
    let (rhs_p, rhs_t) = match config.path {
        PathKind::A | PathKind::B => {
            let jp = jp.ok_or(Error::MissingInput("poloidal current"))?;
            let jt = jt.ok_or(Error::MissingInput("toroidal current"))?;
            jp.expect_kind(&[kinds[2]])?;
            jt.expect_kind(&[kinds[3]])?;
            let pointwise = |q: &QuadPoint| {
                let b = bp.eval_at(q.cell, q.geo, q.bary).val;
                let t = bt.eval_at(q.cell, q.geo, q.bary).scalar();
                let j = jp.eval_at(q.cell, q.geo, q.bary).val;
                let jt = jt.eval_at(q.cell, q.geo, q.bary).scalar();
                let (jperp, bperp) = (perp(j), perp(b));
                let fp = [-t * jperp[0] + jt * bperp[0], -t * jperp[1] + jt * bperp[1]];
                (fp, dot(b, jperp))
            };
            let rp = assemble_rhs(&fp_space, |q| Ok(TestCoeffs::value(scale(config.h(q.x), pointwise(q).0))))?;
            let rt = assemble_rhs(&ft_space, |q| Ok(TestCoeffs::scalar(config.h(q.x) * pointwise(q).1)))?;
            (rp, rt)
        }
        PathKind::C => {
            let pointwise = |q: &QuadPoint| {
                let b = bp.eval_at(q.cell, q.geo, q.bary);
                let t = bt.eval_at(q.cell, q.geo, q.bary);
                let r = q.x.r;
                let grad_rbt = [t.scalar() + r * t.grad[0], r * t.grad[1]];
                let bperp = perp(b.val);
                let fp =
                    [t.scalar() * grad_rbt[0] / r - b.rot * bperp[0], t.scalar() * grad_rbt[1] / r - b.rot * bperp[1]];
                (fp, -dot(b.val, grad_rbt) / r)
            };
            let rp = assemble_rhs(&fp_space, |q| Ok(TestCoeffs::value(scale(config.h(q.x), pointwise(q).0))))?;
            let rt = assemble_rhs(&ft_space, |q| Ok(TestCoeffs::scalar(config.h(q.x) * pointwise(q).1)))?;
            (rp, rt)
        }
    };
    let w = config.mass_weight();
    Ok((project(&fp_space, w, &rhs_p, config.solver_tol)?, project(&ft_space, w, &rhs_t, config.solver_tol)?))
}

/// Runs the full pipeline `B_p → B_t → J_p → J_t → D_b → F` for one path.
pub fn run_transfer(config: &TransferConfig, eq: &EquilibriumInput, target: &MeshRef) -> Result<TransferResult> {
    let src = Sources::prepare(config, eq, target)?;
    let bp = bp_with(config, &src)?;
    let bt = bt_with(config, &src)?;
    let jp = compute_jp(config, &bt)?;
    let jt = compute_jt(config, &bp)?;
    let db = compute_divergence(config, &bp, Some(&src.trace))?;
    let (fp, ft) = match config.path {
        PathKind::C => compute_lorentz(config, &bp, &bt, None, None)?,
        _ => compute_lorentz(config, &bp, &bt, Some(&jp), Some(&jt))?,
    };
    let outside_fraction = if config.path == PathKind::B {
        // Direct evaluation: count again over the target quadrature points.
        let s = Sampler::new(&eq.psi, target);
        let cg = build_space(target, SpaceKind::DG0);
        assemble_rhs(&cg, |q| {
            s.at_quad(q);
            Ok(TestCoeffs::default())
        })?;
        s.outside_fraction()
    } else {
        src.outside_fraction
    };
    let result = TransferResult { bp, bt, jp, jt, db, fp, ft, config: *config, outside_fraction };
    result.check_spaces()?;
    Ok(result)
}

/// Reference `J` from [`compute_j_direct`] with the configured weight placement.
pub fn reference_current(config: &TransferConfig, eq: &EquilibriumInput, target: &MeshRef) -> Result<(Field, Field)> {
    let cfg = TransferConfig { path: PathKind::A, ..*config };
    let src = Sources::prepare(&cfg, eq, target)?;
    j_direct_with(&cfg, &src)
}
