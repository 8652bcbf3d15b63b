//! Gmsh MSH 2.2 ASCII input and output.
//!
//! Only 2-node lines (type 1) and 3-node triangles (type 2) are meaningful;
//! points (type 15) are skipped and every other element type is rejected.
//! The first element tag is the physical tag: on lines it becomes the
//! boundary tag, on triangles the region tag. `x` maps to `r` and `y` to `z`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{edge_key, Mesh2D, Point2};
use crate::{Error, Result};

const LINE: u32 = 1;
const TRIANGLE: u32 = 2;
const POINT: u32 = 15;

pub fn read_gmsh(path: impl AsRef<Path>) -> Result<Mesh2D> {
    let text = std::fs::read_to_string(path)?;
    parse_gmsh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if !t.is_empty() {
                return Ok(t);
            }
        }
        Err(Error::Parse { line: self.last, msg: "unexpected end of file".into() })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.last, msg: msg.into() }
    }

    fn expect(&mut self, tag: &str) -> Result<()> {
        let l = self.next_line()?;
        if l == tag {
            Ok(())
        } else {
            Err(self.err(format!("expected {tag}, found {l:?}")))
        }
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, lines: &Lines) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| lines.err(format!("malformed number {tok:?}")))
}

pub fn parse_gmsh(text: &str) -> Result<Mesh2D> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let mut nodes: Option<(Vec<Point2>, HashMap<u64, usize>)> = None;
    let mut triangles: Vec<([u64; 3], i32)> = Vec::new();
    let mut segments: Vec<([u64; 2], i32)> = Vec::new();
    let mut saw_format = false;

    loop {
        let header = match lines.next_line() {
            Ok(h) => h,
            Err(_) => break,
        };
        match header {
            "$MeshFormat" => {
                let l = lines.next_line()?;
                let mut it = l.split_whitespace();
                let version: String = parse_num(it.next(), &lines)?;
                let file_type: u32 = parse_num(it.next(), &lines)?;
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {version}")));
                }
                if file_type != 0 {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                lines.expect("$EndMeshFormat")?;
                saw_format = true;
            }
            "$Nodes" => {
                let n: usize = parse_num(Some(lines.next_line()?), &lines)?;
                let mut pts = Vec::with_capacity(n);
                let mut ids = HashMap::with_capacity(n);
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let mut it = l.split_whitespace();
                    let id: u64 = parse_num(it.next(), &lines)?;
                    let x: f64 = parse_num(it.next(), &lines)?;
                    let y: f64 = parse_num(it.next(), &lines)?;
                    let z: f64 = parse_num(it.next(), &lines)?;
                    if z != 0.0 {
                        return Err(Error::NotPlanar(format!("node {id} has z = {z}")));
                    }
                    if ids.insert(id, pts.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    pts.push(Point2::new(x, y));
                }
                lines.expect("$EndNodes")?;
                nodes = Some((pts, ids));
            }
            "$Elements" => {
                let n: usize = parse_num(Some(lines.next_line()?), &lines)?;
                for _ in 0..n {
                    let l = lines.next_line()?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() < 3 {
                        return Err(lines.err("truncated element record"));
                    }
                    let kind: u32 = parse_num(Some(toks[1]), &lines)?;
                    let ntags: usize = parse_num(Some(toks[2]), &lines)?;
                    let tag: i32 = if ntags > 0 { parse_num(toks.get(3).copied(), &lines)? } else { 0 };
                    let conn = toks.get(3 + ntags..).unwrap_or(&[]);
                    let ids = conn.iter().map(|t| parse_num::<u64>(Some(t), &lines)).collect::<Result<Vec<_>>>()?;
                    match kind {
                        POINT => {}
                        LINE if ids.len() == 2 => segments.push(([ids[0], ids[1]], tag)),
                        TRIANGLE if ids.len() == 3 => triangles.push(([ids[0], ids[1], ids[2]], tag)),
                        LINE | TRIANGLE => return Err(lines.err("wrong node count for element")),
                        other => return Err(Error::UnsupportedElement(other)),
                    }
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with("$End") => return Err(lines.err(format!("stray {other}"))),
            other if other.starts_with('$') => {
                // Skip sections we do not interpret ($PhysicalNames, $NodeData, ...).
                let end = format!("$End{}", &other[1..]);
                while lines.next_line()? != end {}
            }
            other => return Err(lines.err(format!("unexpected line {other:?}"))),
        }
    }

    if !saw_format {
        return Err(Error::Parse { line: 1, msg: "missing $MeshFormat section".into() });
    }
    let (pts, ids) = nodes.ok_or(Error::Parse { line: lines.last, msg: "missing $Nodes section".into() })?;
    if triangles.is_empty() {
        return Err(Error::NotPlanar("no triangle elements".into()));
    }
    let lookup = |id: u64| {
        ids.get(&id).copied().ok_or_else(|| Error::Parse { line: lines.last, msg: format!("unknown node id {id}") })
    };
    let mut cells = Vec::with_capacity(triangles.len());
    let mut regions = Vec::with_capacity(triangles.len());
    for (conn, tag) in &triangles {
        cells.push([lookup(conn[0])?, lookup(conn[1])?, lookup(conn[2])?]);
        regions.push(*tag);
    }
    let mut tags = HashMap::new();
    for (conn, tag) in &segments {
        tags.insert(edge_key(lookup(conn[0])?, lookup(conn[1])?), *tag);
    }
    Mesh2D::new(pts, cells, regions, &tags)
}

/// Serializes the mesh as MSH 2.2 ASCII with boundary lines followed by
/// triangles. Node and element ids are 1-based and contiguous.
pub fn write_gmsh(mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, gmsh_string(mesh))?;
    Ok(())
}

pub fn gmsh_string(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.num_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} 0", i + 1, p.r, p.z);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let nb = mesh.boundary_edges().len();
    let _ = writeln!(s, "{}", nb + mesh.num_cells());
    let mut id = 1;
    for b in mesh.boundary_edges() {
        let [lo, hi] = mesh.edges()[b.edge];
        let cell = mesh.cells()[b.cell];
        // Write boundary lines in the counterclockwise direction of the domain.
        let (a, c) = if cell[(b.local + 1) % 3] == lo { (lo, hi) } else { (hi, lo) };
        let _ = writeln!(s, "{id} {LINE} 2 {} {} {} {}", b.tag, b.tag, a + 1, c + 1);
        id += 1;
    }
    for (c, cell) in mesh.cells().iter().enumerate() {
        let t = mesh.region_tags()[c];
        let _ = writeln!(s, "{id} {TRIANGLE} 2 {t} {t} {} {} {}", cell[0] + 1, cell[1] + 1, cell[2] + 1);
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}
