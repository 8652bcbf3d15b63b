//! Shipped meshes and equilibria used by the tests, the CLI and the
//! acceptance battery. Files live in the crate's `fixtures/` directory.

use std::path::PathBuf;
use std::sync::Arc;

use crate::assembly::DEFAULT_TOL;
use crate::equilibria::{manufactured_vacuum, solve_linear_gs, EquilibriumInput, Geqdsk};
use crate::mesh::{build_structured_mesh, parse_gmsh, MeshRef};
use crate::Result;

/// Structured fixture sizes (cells per side).
pub const STRUCTURED_SIZES: [usize; 3] = [8, 32, 128];

/// Source constant and vacuum field of the linear Grad-Shafranov fixture.
pub const LINEAR_GS_C: f64 = 1.0;
pub const LINEAR_GS_F0: f64 = 1.0;

/// Coefficients `(c1, c2, c3, f0)` of the manufactured vacuum fixture.
pub const VACUUM: (f64, f64, f64, f64) = (1.0, 0.0, 0.0, 2.0);

/// Node perturbation amplitude of the misaligned meshes.
pub const PERTURBATION: f64 = 0.05;

pub const TWO_TRIANGLES_MSH: &str = include_str!("../fixtures/two_triangles.msh");
pub const QUAD_MSH: &str = include_str!("../fixtures/quad.msh");
pub const PLASMA_WALL_MSH: &str = include_str!("../fixtures/plasma_wall.msh");
pub const SYNTHETIC_GEQDSK: &str = include_str!("../fixtures/synthetic.geqdsk");

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Shipped file name of the `n`×`n` structured mesh.
pub fn structured_file(n: usize) -> PathBuf {
    fixture_dir().join(format!("structured_{n}.msh"))
}

/// `n`×`n` structured mesh of `[1, 2] × [0, 1]`.
pub fn structured(n: usize) -> MeshRef {
    Arc::new(build_structured_mesh(1.0, 2.0, 0.0, 1.0, n, n).expect("valid extents"))
}

/// Delaunay triangulation of `[1, 2] × [0, 1]` with an elliptic plasma
/// (region 1) inside a wall region (region 2).
pub fn plasma_wall() -> MeshRef {
    Arc::new(parse_gmsh(PLASMA_WALL_MSH).expect("shipped fixture parses"))
}

pub fn linear_gs(mesh: &MeshRef) -> Result<EquilibriumInput> {
    solve_linear_gs(mesh, LINEAR_GS_C, LINEAR_GS_F0, DEFAULT_TOL)
}

pub fn vacuum(mesh: &MeshRef) -> EquilibriumInput {
    let (c1, c2, c3, f0) = VACUUM;
    manufactured_vacuum(mesh, c1, c2, c3, f0)
}

/// 5×5 G-EQDSK grid on `[1, 2] × [-0.5, 0.5]` with
/// `Ψ = 4((r - 1.5)² + z²)` and a linearly falling `fpol`.
pub fn synthetic_geqdsk() -> Geqdsk {
    let (nw, nh) = (5, 5);
    let (rleft, rdim, zmid, zdim) = (1.0, 1.0, 0.0, 1.0);
    let mut psirz = Vec::with_capacity(nw * nh);
    for j in 0..nh {
        let z = zmid - 0.5 * zdim + zdim * j as f64 / (nh - 1) as f64;
        for i in 0..nw {
            let r = rleft + rdim * i as f64 / (nw - 1) as f64;
            psirz.push(4.0 * ((r - 1.5) * (r - 1.5) + z * z));
        }
    }
    let fpol = (0..nw).map(|i| 1.0 - 0.1 * i as f64 / (nw - 1) as f64).collect();
    Geqdsk {
        description: "synthetic fixture".into(),
        idum: 3,
        nw,
        nh,
        rdim,
        zdim,
        rcentr: 1.5,
        rleft,
        zmid,
        rmaxis: 1.5,
        zmaxis: 0.0,
        simag: 0.0,
        sibry: 1.0,
        bcentr: 1.0,
        current: 1.0e5,
        fpol,
        pres: vec![0.0; nw],
        ffprim: vec![0.0; nw],
        pprime: vec![0.0; nw],
        psirz,
        qpsi: vec![1.0; nw],
        boundary: vec![[2.0, 0.0], [1.5, 0.5], [1.0, 0.0], [1.5, -0.5], [2.0, 0.0]],
        limiter: vec![[1.0, -0.5], [2.0, -0.5], [2.0, 0.5], [1.0, 0.5], [1.0, -0.5]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gmsh_string;

    #[test]
    fn shipped_structured_meshes_match_generator() {
        for n in STRUCTURED_SIZES {
            let text = std::fs::read_to_string(structured_file(n)).unwrap();
            assert_eq!(text, gmsh_string(&structured(n)), "structured_{n}.msh is stale");
        }
    }

    #[test]
    fn shipped_geqdsk_matches_generator() {
        assert_eq!(SYNTHETIC_GEQDSK, synthetic_geqdsk().to_text());
    }

    #[test]
    fn plasma_wall_has_two_regions() {
        let m = plasma_wall();
        m.check_invariants().unwrap();
        let plasma = m.region_tags().iter().filter(|&&t| t == 1).count();
        let wall = m.region_tags().iter().filter(|&&t| t == 2).count();
        assert!(plasma > 50 && wall > 50 && plasma + wall == m.num_cells());
    }
}
