//! Region-masked r-weighted norms, CSV reports and VTU export of results.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::assembly::Quadrature;
use crate::equilibria::EquilibriumInput;
use crate::mesh::{Mesh2D, VtuData};
use crate::spaces::Field;
use crate::transfer::TransferResult;
use crate::{Error, Result};

/// Region tag of the plasma on meshes that carry more than one region.
pub const PLASMA_TAG: i32 = 1;

/// Default separatrix band: the outer 5% of `[Ψ_sep, Ψ_axis]`.
pub const DEFAULT_BAND: (f64, f64) = (0.0, 0.05);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionMask {
    All,
    Tag(i32),
    /// Region tag [`PLASMA_TAG`] on multi-region meshes, otherwise cells
    /// whose centroid lies on the axis side of the separatrix.
    Plasma,
    /// Cells whose centroid has normalized flux in `[lo, hi]`, 0 being the
    /// separatrix and 1 the axis.
    Band {
        lo: f64,
        hi: f64,
    },
}

impl RegionMask {
    pub fn band() -> Self {
        RegionMask::Band { lo: DEFAULT_BAND.0, hi: DEFAULT_BAND.1 }
    }

    /// Resolves the mask to a per-cell selection. `eq` is needed for
    /// flux-based masks and may live on another mesh.
    pub fn select(&self, mesh: &Mesh2D, eq: Option<&EquilibriumInput>) -> Result<Vec<bool>> {
        let n = mesh.num_cells();
        let tags = mesh.region_tags();
        let multi_region = tags.iter().any(|&t| t != tags[0]);
        let sel: Vec<bool> = match *self {
            RegionMask::All => vec![true; n],
            RegionMask::Tag(t) => tags.iter().map(|&x| x == t).collect(),
            RegionMask::Plasma if multi_region => tags.iter().map(|&x| x == PLASMA_TAG).collect(),
            RegionMask::Plasma => {
                let s = normalized_flux(mesh, eq.ok_or(Error::MissingInput("equilibrium for the plasma mask"))?);
                s.iter().map(|&s| s >= 0.0).collect()
            }
            RegionMask::Band { lo, hi } => {
                let s = normalized_flux(mesh, eq.ok_or(Error::MissingInput("equilibrium for the band mask"))?);
                s.iter().map(|&s| s >= lo && s <= hi).collect()
            }
        };
        if sel.iter().any(|&b| b) {
            Ok(sel)
        } else {
            Err(Error::EmptyMask)
        }
    }
}

/// Normalized flux at every cell centroid of `mesh`.
fn normalized_flux(mesh: &Mesh2D, eq: &EquilibriumInput) -> Vec<f64> {
    let same = eq.mesh.same_as(mesh);
    (0..mesh.num_cells())
        .map(|c| {
            let psi = if same {
                eq.psi.eval_cell(c, [1.0 / 3.0; 3]).scalar()
            } else {
                eq.psi.eval_point(mesh.centroid(c)).scalar()
            };
            eq.normalized(psi)
        })
        .collect()
}

impl fmt::Display for RegionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionMask::All => f.write_str("all"),
            RegionMask::Tag(t) => write!(f, "tag:{t}"),
            RegionMask::Plasma => f.write_str("plasma"),
            RegionMask::Band { lo, hi } => write!(f, "band:{lo},{hi}"),
        }
    }
}

impl FromStr for RegionMask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad mask {s:?}; expected all, plasma, tag:<n> or band[:lo,hi]"));
        let s = s.trim();
        match s {
            "all" => return Ok(RegionMask::All),
            "plasma" => return Ok(RegionMask::Plasma),
            "band" => return Ok(RegionMask::band()),
            _ => {}
        }
        if let Some(t) = s.strip_prefix("tag:") {
            return t.trim().parse().map(RegionMask::Tag).map_err(|_| bad());
        }
        if let Some(b) = s.strip_prefix("band:") {
            let (lo, hi) = b.split_once(',').ok_or_else(bad)?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            if !(lo <= hi) {
                return Err(bad());
            }
            return Ok(RegionMask::Band { lo, hi });
        }
        Err(bad())
    }
}

fn check_selection(mesh: &Mesh2D, cells: &[bool]) -> Result<()> {
    if cells.len() != mesh.num_cells() {
        return Err(Error::MeshMismatch);
    }
    if !cells.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

/// `sqrt(∫_mask r |u|² dA)`.
pub fn weighted_norm(field: &Field, cells: &[bool]) -> Result<f64> {
    let mesh = field.mesh();
    check_selection(mesh, cells)?;
    let q = Quadrature::triangle();
    let mut sum = 0.0;
    for c in (0..mesh.num_cells()).filter(|&c| cells[c]) {
        let geo = mesh.geometry(c);
        for (b, w) in q.points.iter().zip(&q.weights) {
            let v = field.eval_at(c, &geo, *b).val;
            sum += w * geo.area * geo.map(*b).r * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    Ok(sum.sqrt())
}

/// `sqrt(∫_mask r |a - b|² dA)`; the kinds may differ but both fields must
/// be scalar or both vector, on the same mesh.
pub fn compare_fields(a: &Field, b: &Field, cells: &[bool]) -> Result<f64> {
    if !a.space.same_mesh(&b.space) {
        return Err(Error::MeshMismatch);
    }
    if a.kind().is_vector() != b.kind().is_vector() {
        return Err(Error::KindMismatch { expected: vec![a.kind()], found: b.kind() });
    }
    let mesh = a.mesh();
    check_selection(mesh, cells)?;
    let q = Quadrature::triangle();
    let mut sum = 0.0;
    for c in (0..mesh.num_cells()).filter(|&c| cells[c]) {
        let geo = mesh.geometry(c);
        for (p, w) in q.points.iter().zip(&q.weights) {
            let (x, y) = (a.eval_at(c, &geo, *p).val, b.eval_at(c, &geo, *p).val);
            let d = [x[0] - y[0], x[1] - y[1]];
            sum += w * geo.area * geo.map(*p).r * (d[0] * d[0] + d[1] * d[1]);
        }
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub field: String,
    pub mask: String,
    pub norm: f64,
    pub path: String,
    pub rweight: String,
    pub mesh_id: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshStats {
    pub cells: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub refinement_level: usize,
}

impl MeshStats {
    pub fn of(mesh: &Mesh2D, refinement_level: usize) -> Self {
        let (r_min, r_max) = mesh.r_range();
        Self { cells: mesh.num_cells(), r_min, r_max, refinement_level }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DiagnosticsReport {
    pub rows: Vec<NormRow>,
    pub meshes: Vec<(String, MeshStats)>,
    /// Free-form `key = value` lines echoing the configuration.
    pub config: Vec<(String, String)>,
}

impl DiagnosticsReport {
    /// Appends one row per field and mask for a transfer result.
    pub fn add_result(
        &mut self,
        result: &TransferResult,
        masks: &[(RegionMask, Vec<bool>)],
        mesh_id: &str,
    ) -> Result<()> {
        for (name, field) in result.fields() {
            for (mask, cells) in masks {
                let norm = weighted_norm(field, cells)?;
                if !norm.is_finite() {
                    return Err(Error::NonFinite { cell: 0 });
                }
                self.rows.push(NormRow {
                    field: name.to_string(),
                    mask: mask.to_string(),
                    norm,
                    path: result.config.path.to_string(),
                    rweight: result.config.rweight.to_string(),
                    mesh_id: mesh_id.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn norm(&self, field: &str, mask: &str, path: &str, rweight: &str, mesh_id: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.field == field && r.mask == mask && r.path == path && r.rweight == rweight && r.mesh_id == mesh_id
            })
            .map(|r| r.norm)
    }

    /// `norm(path a) / norm(path b)` for every field and mask on which both
    /// exist and the denominator is positive.
    pub fn path_ratios(&self, a: &str, b: &str) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for ra in self.rows.iter().filter(|r| r.path == a) {
            let denom = self.rows.iter().find(|r| {
                r.path == b
                    && r.field == ra.field
                    && r.mask == ra.mask
                    && r.rweight == ra.rweight
                    && r.mesh_id == ra.mesh_id
            });
            if let Some(rb) = denom.filter(|rb| rb.norm > 0.0) {
                out.push((ra.field.clone(), ra.mask.clone(), ra.norm / rb.norm));
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["field", "mask", "norm", "path", "rweight", "mesh_id"])?;
        for r in &self.rows {
            w.write_record([&r.field, &r.mask, &format!("{:.16e}", r.norm), &r.path, &r.rweight, &r.mesh_id])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn export_report(report: &DiagnosticsReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, report.to_csv()?)?;
    Ok(())
}

/// Arrays for VTU export: CG1 fields as point data, everything else as
/// per-cell averages.
pub fn vtu_data(result: &TransferResult, extra_point: &[(&str, &Field)]) -> VtuData {
    let mut data = VtuData::default();
    let all = extra_point.iter().copied().chain(result.fields());
    for (name, f) in all {
        let mesh = f.mesh();
        match f.kind() {
            crate::SpaceKind::CG1 => data.point_scalars.push((name.to_string(), f.coeffs.clone())),
            k if k.is_vector() => {
                data.cell_vectors.push((name.to_string(), (0..mesh.num_cells()).map(|c| f.cell_average(c)).collect()))
            }
            _ => data
                .cell_scalars
                .push((name.to_string(), (0..mesh.num_cells()).map(|c| f.cell_average(c)[0]).collect())),
        }
    }
    data
}
