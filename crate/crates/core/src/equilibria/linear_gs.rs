//! Fixed-boundary zero-beta Grad-Shafranov solve with `f f' = c`.

use super::EquilibriumInput;
use crate::assembly::{assemble_linear_form, assemble_matrix, solve_spd, CsrMatrix};
use crate::mesh::MeshRef;
use crate::spaces::{build_space, Field, SpaceKind};
use crate::{Error, Result};

/// `K_ij = ∫ (1/r) ∇φ_i·∇φ_j dA` on CG1, with boundary rows and columns
/// replaced by the identity.
pub fn gs_stiffness(mesh: &MeshRef) -> (CsrMatrix, Vec<bool>) {
    let cg = build_space(mesh, SpaceKind::CG1);
    let mut k = assemble_matrix(&cg, |x| (0.0, 1.0 / x.r));
    let fixed = boundary_vertices(mesh);
    k.constrain(&fixed);
    (k, fixed)
}

fn boundary_vertices(mesh: &MeshRef) -> Vec<bool> {
    let mut fixed = vec![false; mesh.num_vertices()];
    for b in mesh.boundary_edges() {
        for v in mesh.edges()[b.edge] {
            fixed[v] = true;
        }
    }
    fixed
}

/// Solves `∫ (1/r) ∇Ψ·∇η = ∫ (c/r) η` with `Ψ = 0` on the boundary, then sets
/// `f = sqrt(f0² + 2 c Ψ)` nodally so that `f f'(Ψ) = c`.
pub fn solve_linear_gs(mesh: &MeshRef, c: f64, f0: f64, tol: f64) -> Result<EquilibriumInput> {
    if c < 0.0 || !(f0 > 0.0) {
        return Err(Error::Config(format!("linear GS needs c >= 0 and f0 > 0 (got c = {c}, f0 = {f0})")));
    }
    let cg = build_space(mesh, SpaceKind::CG1);
    let (k, fixed) = gs_stiffness(mesh);
    let mut rhs = assemble_linear_form(&cg, |x, _| [c / x.r, 0.0])?;
    for (b, &fx) in rhs.iter_mut().zip(&fixed) {
        if fx {
            *b = 0.0;
        }
    }
    let psi = solve_spd(&k, &rhs, tol)?;
    let mut f = Vec::with_capacity(psi.len());
    for (node, &p) in psi.iter().enumerate() {
        let value = f0 * f0 + 2.0 * c * p;
        if value < 0.0 {
            return Err(Error::NegativeRadicand { node, value });
        }
        f.push(value.sqrt());
    }
    let psi_axis = super::farthest_from(&psi, 0.0);
    Ok(EquilibriumInput {
        mesh: mesh.clone(),
        psi: Field::new(cg.clone(), psi)?,
        f: Field::new(cg, f)?,
        psi_sep: 0.0,
        psi_axis,
        profile: None,
        notes: Vec::new(),
    })
}
