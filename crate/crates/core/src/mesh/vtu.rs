//! VTK XML unstructured-grid output (ASCII).

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh2D;
use crate::{Error, Result};

/// Named arrays attached to a mesh for export.
#[derive(Debug, Clone, Default)]
pub struct VtuData {
    pub point_scalars: Vec<(String, Vec<f64>)>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
    /// Written as 3-component cell data with a zero third component.
    pub cell_vectors: Vec<(String, Vec<[f64; 2]>)>,
}

impl VtuData {
    fn check(&self, mesh: &Mesh2D) -> Result<()> {
        let bad = |name: &str, got: usize, want: usize| {
            Error::InvalidMesh(format!("array {name} has {got} entries, expected {want}"))
        };
        for (n, v) in &self.point_scalars {
            if v.len() != mesh.num_vertices() {
                return Err(bad(n, v.len(), mesh.num_vertices()));
            }
        }
        for (n, v) in &self.cell_scalars {
            if v.len() != mesh.num_cells() {
                return Err(bad(n, v.len(), mesh.num_cells()));
            }
        }
        for (n, v) in &self.cell_vectors {
            if v.len() != mesh.num_cells() {
                return Err(bad(n, v.len(), mesh.num_cells()));
            }
        }
        Ok(())
    }
}

pub fn write_vtu(mesh: &Mesh2D, data: &VtuData, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, vtu_string(mesh, data)?)?;
    Ok(())
}

/// Triangle cell type in the VTK numbering.
const VTK_TRIANGLE: u8 = 5;

pub fn vtu_string(mesh: &Mesh2D, data: &VtuData) -> Result<String> {
    data.check(mesh)?;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\"?>\n");
    s.push_str("<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n");
    s.push_str("  <UnstructuredGrid>\n");
    let _ =
        writeln!(s, "    <Piece NumberOfPoints=\"{}\" NumberOfCells=\"{}\">", mesh.num_vertices(), mesh.num_cells());

    s.push_str("      <PointData>\n");
    for (name, v) in &data.point_scalars {
        scalar_array(&mut s, name, v);
    }
    s.push_str("      </PointData>\n      <CellData>\n");
    scalar_array(&mut s, "region", &mesh.region_tags().iter().map(|&t| t as f64).collect::<Vec<_>>());
    for (name, v) in &data.cell_scalars {
        scalar_array(&mut s, name, v);
    }
    for (name, v) in &data.cell_vectors {
        let _ = writeln!(
            s,
            "        <DataArray type=\"Float64\" Name=\"{name}\" NumberOfComponents=\"3\" format=\"ascii\">"
        );
        for x in v {
            let _ = writeln!(s, "          {:e} {:e} 0", x[0], x[1]);
        }
        s.push_str("        </DataArray>\n");
    }
    s.push_str("      </CellData>\n");

    s.push_str("      <Points>\n");
    s.push_str("        <DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n");
    for p in mesh.vertices() {
        let _ = writeln!(s, "          {:e} {:e} 0", p.r, p.z);
    }
    s.push_str("        </DataArray>\n      </Points>\n");

    s.push_str("      <Cells>\n");
    s.push_str("        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n");
    for c in mesh.cells() {
        let _ = writeln!(s, "          {} {} {}", c[0], c[1], c[2]);
    }
    s.push_str("        </DataArray>\n");
    s.push_str("        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n");
    for i in 0..mesh.num_cells() {
        let _ = writeln!(s, "          {}", 3 * (i + 1));
    }
    s.push_str("        </DataArray>\n");
    s.push_str("        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n");
    for _ in 0..mesh.num_cells() {
        let _ = writeln!(s, "          {VTK_TRIANGLE}");
    }
    s.push_str("        </DataArray>\n      </Cells>\n");
    s.push_str("    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n");
    Ok(s)
}

fn scalar_array(s: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(s, "        <DataArray type=\"Float64\" Name=\"{name}\" format=\"ascii\">");
    for x in v {
        let _ = writeln!(s, "          {x:e}");
    }
    s.push_str("        </DataArray>\n");
}
