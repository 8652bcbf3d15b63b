//! Sources of `(Ψ, f)` on a Grad-Shafranov mesh.

mod geqdsk;
mod linear_gs;
mod profile;

use crate::mesh::MeshRef;
use crate::spaces::{build_space, Field, SpaceKind};
use crate::Result;

pub use geqdsk::{parse_geqdsk, read_geqdsk, write_geqdsk, Geqdsk};
pub use linear_gs::{gs_stiffness, solve_linear_gs};
pub use profile::{eval_profile, Profile1D};

/// `Ψ` and `f` as CG1 fields on a common source mesh.
#[derive(Debug, Clone)]
pub struct EquilibriumInput {
    pub mesh: MeshRef,
    pub psi: Field,
    pub f: Field,
    pub psi_sep: f64,
    /// Flux at the magnetic axis, used to orient plasma and band masks.
    pub psi_axis: f64,
    pub profile: Option<Profile1D>,
    /// Notes recorded while building the input (clamping, reversal, ...).
    pub notes: Vec<String>,
}

impl EquilibriumInput {
    /// Normalized flux `(Ψ - Ψ_sep) / (Ψ_axis - Ψ_sep)`: 0 on the separatrix, 1 at the axis.
    pub fn normalized(&self, psi: f64) -> f64 {
        let span = self.psi_axis - self.psi_sep;
        if span == 0.0 {
            0.0
        } else {
            (psi - self.psi_sep) / span
        }
    }
}

/// `Ψ = c1 r² + c2 + c3 r² z` with constant `f = f0`.
///
/// Both satisfy `Δ*Ψ = 0` and give `J = 0` and `B × J = 0`.
pub fn manufactured_vacuum(mesh: &MeshRef, c1: f64, c2: f64, c3: f64, f0: f64) -> EquilibriumInput {
    let cg = build_space(mesh, SpaceKind::CG1);
    let psi = cg.interpolate(|p| [c1 * p.r * p.r + c2 + c3 * p.r * p.r * p.z, 0.0]);
    let f = cg.interpolate(|_| [f0, 0.0]);
    let boundary_min = mesh
        .boundary_edges()
        .iter()
        .flat_map(|b| mesh.edges()[b.edge])
        .map(|v| psi.coeffs[v])
        .fold(f64::INFINITY, f64::min);
    let psi_axis = farthest_from(&psi.coeffs, boundary_min);
    EquilibriumInput { mesh: mesh.clone(), psi, f, psi_sep: boundary_min, psi_axis, profile: None, notes: Vec::new() }
}

/// The nodal value farthest from `reference`.
pub(crate) fn farthest_from(values: &[f64], reference: f64) -> f64 {
    values
        .iter()
        .copied()
        .fold(reference, |best, v| if (v - reference).abs() > (best - reference).abs() { v } else { best })
}

/// Checks that `f` is on the same mesh and kind as `psi`.
pub fn validate(eq: &EquilibriumInput) -> Result<()> {
    eq.psi.expect_kind(&[SpaceKind::CG1])?;
    eq.f.expect_kind(&[SpaceKind::CG1])?;
    if !eq.psi.space.same_mesh(&eq.f.space) || !eq.mesh.same_as(eq.psi.mesh()) {
        return Err(crate::Error::MeshMismatch);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use std::sync::Arc;

    #[test]
    fn trivial_vacuum() {
        let m = Arc::new(build_structured_mesh(1.0, 2.0, 0.0, 1.0, 2, 2).unwrap());
        let eq = manufactured_vacuum(&m, 0.0, 1.0, 0.0, 0.0);
        assert!(eq.psi.coeffs.iter().all(|&x| x == 1.0));
        assert!(eq.f.coeffs.iter().all(|&x| x == 0.0));
        validate(&eq).unwrap();
    }

    #[test]
    fn vacuum_separatrix_is_boundary_minimum() {
        let m = Arc::new(build_structured_mesh(1.0, 2.0, 0.0, 1.0, 4, 4).unwrap());
        let eq = manufactured_vacuum(&m, 1.0, 0.0, 0.0, 2.0);
        assert_eq!(eq.psi_sep, 1.0);
        assert_eq!(eq.psi_axis, 4.0);
        assert_eq!(eq.normalized(4.0), 1.0);
    }
}
