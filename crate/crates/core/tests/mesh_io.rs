use std::collections::HashMap;
use std::sync::Arc;

use gs_transfer::fixtures;
use gs_transfer::mesh::{
    gmsh_string, parse_gmsh, perturb_mesh, read_gmsh, refine_along_levelset, refine_marked, vtu_string, write_gmsh,
    LocationStatus, VtuData,
};
use gs_transfer::{Error, Mesh2D, Point2};

fn total_area(m: &Mesh2D) -> f64 {
    (0..m.num_cells()).map(|c| m.signed_area(c)).sum()
}

#[test]
fn plasma_wall_round_trips_through_a_file() {
    let m = fixtures::plasma_wall();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pw.msh");
    write_gmsh(&m, &p).unwrap();
    let back = read_gmsh(&p).unwrap();
    assert!(back.same_as(&m));
    assert_eq!(back.region_tags(), m.region_tags());
    assert_eq!(back.boundary_tag_map(), m.boundary_tag_map());
    assert_eq!(gmsh_string(&back), gmsh_string(&m));
}

#[test]
fn shipped_small_meshes() {
    let two = parse_gmsh(fixtures::TWO_TRIANGLES_MSH).unwrap();
    assert_eq!((two.num_vertices(), two.num_cells(), two.num_edges()), (4, 2, 5));
    assert!(total_area(&two) > 0.0);
    assert!(matches!(parse_gmsh(fixtures::QUAD_MSH), Err(Error::UnsupportedElement(3))));
}

#[test]
fn structured_area_and_boundary() {
    let m = fixtures::structured(8);
    assert!((total_area(&m) - 1.0).abs() < 1e-14);
    assert_eq!(m.boundary_edges().len(), 32);
    let s = m.boundary_normal_sum();
    assert!(s.norm() < 1e-14);
}

#[test]
fn perturbed_mesh_keeps_connectivity_and_tags() {
    let m = fixtures::structured(8);
    let p = perturb_mesh(&m, fixtures::PERTURBATION).unwrap();
    p.check_invariants().unwrap();
    assert_eq!(p.cells(), m.cells());
    assert_eq!(p.boundary_tag_map(), m.boundary_tag_map());
    assert!(!p.same_as(&m));
    // Large amplitudes fold cells and must be rejected.
    assert!(matches!(perturb_mesh(&fixtures::structured(16), 3.0), Err(Error::NonPositiveArea { .. })));
}

#[test]
fn point_location_statuses() {
    let m = fixtures::structured(4);
    let inside = m.locate_point(Point2::new(1.3, 0.4));
    assert_eq!(inside.status, LocationStatus::Inside);
    let x = m.geometry(inside.cell).map(inside.bary);
    assert!((x.r - 1.3).abs() < 1e-14 && (x.z - 0.4).abs() < 1e-14);
    assert_eq!(m.locate_point(Point2::new(2.0, 0.5)).status, LocationStatus::OnBoundary);
    assert!(m.locate_point(Point2::new(2.5, 0.5)).is_outside());
}

#[test]
fn refinement_preserves_area_and_interpolates_linear_data() {
    let m = fixtures::structured(4);
    let lin: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p.r - p.z).collect();
    let marked: Vec<bool> = (0..m.num_cells()).map(|c| c % 3 == 0).collect();
    let (r, vals) = refine_marked(&m, &marked, &[&lin]).unwrap();
    r.check_invariants().unwrap();
    assert!(r.num_cells() > m.num_cells());
    assert!((total_area(&r) - 1.0).abs() < 1e-13);
    for (p, v) in r.vertices().iter().zip(&vals[0]) {
        assert!((2.0 * p.r - p.z - v).abs() < 1e-14);
    }

    let psi: Vec<f64> = m.vertices().iter().map(|p| (p.r - 1.5).powi(2) + (p.z - 0.5).powi(2)).collect();
    let (l, _) = refine_along_levelset(&m, &psi, 0.1, 2).unwrap();
    l.check_invariants().unwrap();
    assert!(l.num_cells() > m.num_cells());
}

#[test]
fn malformed_msh_is_rejected() {
    assert!(matches!(parse_gmsh("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n"), Err(Error::Parse { .. })));
    assert!(parse_gmsh("").is_err());
    let v = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
    assert!(matches!(Mesh2D::new(v, vec![[0, 1, 2]], vec![1], &HashMap::new()), Err(Error::AxisTouched { .. })));
}

#[test]
fn vtu_has_declared_sizes() {
    let m = Arc::new(fixtures::structured(2).as_ref().clone());
    let data = VtuData { cell_scalars: vec![("c".into(), vec![1.0; m.num_cells()])], ..Default::default() };
    let s = vtu_string(&m, &data).unwrap();
    assert!(s.contains(&format!("NumberOfPoints=\"{}\"", m.num_vertices())));
    assert!(s.contains(&format!("NumberOfCells=\"{}\"", m.num_cells())));
    let bad = VtuData { point_scalars: vec![("p".into(), vec![0.0; 2])], ..Default::default() };
    assert!(vtu_string(&m, &bad).is_err());
}
