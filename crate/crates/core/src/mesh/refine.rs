//! Newest-vertex bisection with conforming closure.
//!
//! Each cell is stored with its newest vertex first, so the refinement edge of
//! cell `[v0, v1, v2]` is `(v1, v2)`. Unrefined input cells are rotated so that
//! the refinement edge is their longest edge.

use std::collections::{HashMap, HashSet};

use super::{edge_key, Mesh2D, Point2};
use crate::Result;

/// Bisects every marked cell once and closes the mesh so that no hanging
/// nodes remain. Nodal `values` are linearly interpolated onto new vertices.
pub fn refine_marked(mesh: &Mesh2D, marked: &[bool], values: &[&[f64]]) -> Result<(Mesh2D, Vec<Vec<f64>>)> {
    let verts = mesh.vertices();
    let cells: Vec<[usize; 3]> = mesh.cells().iter().map(|c| newest_first(c, verts)).collect();

    let mut split: HashSet<(usize, usize)> = HashSet::new();
    for (c, cell) in cells.iter().enumerate() {
        if marked[c] {
            split.insert(edge_key(cell[1], cell[2]));
        }
    }
    // Closure: a cell with any split edge must also split its refinement edge.
    loop {
        let mut changed = false;
        for cell in &cells {
            let refinement = edge_key(cell[1], cell[2]);
            if split.contains(&refinement) {
                continue;
            }
            if split.contains(&edge_key(cell[0], cell[1])) || split.contains(&edge_key(cell[2], cell[0])) {
                split.insert(refinement);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut vertices = verts.to_vec();
    let mut new_values: Vec<Vec<f64>> = values.iter().map(|v| v.to_vec()).collect();
    let mut tags = mesh.boundary_tag_map();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out_cells = Vec::with_capacity(cells.len() + 2 * split.len());
    let mut out_regions = Vec::with_capacity(out_cells.capacity());

    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point2>, vals: &mut Vec<Vec<f64>>| -> usize {
        let key = edge_key(a, b);
        *midpoints.entry(key).or_insert_with(|| {
            let m = vertices.len();
            vertices.push(0.5 * (vertices[a] + vertices[b]));
            for v in vals.iter_mut() {
                let x = 0.5 * (v[a] + v[b]);
                v.push(x);
            }
            if let Some(t) = tags.remove(&key) {
                tags.insert(edge_key(a, m), t);
                tags.insert(edge_key(m, b), t);
            }
            m
        })
    };

    for (c, &cell) in cells.iter().enumerate() {
        let region = mesh.region_tags()[c];
        let mut stack = vec![cell];
        while let Some([v0, v1, v2]) = stack.pop() {
            if split.contains(&edge_key(v1, v2)) {
                let m = mid(v1, v2, &mut vertices, &mut new_values);
                stack.push([m, v2, v0]);
                stack.push([m, v0, v1]);
            } else {
                out_cells.push([v0, v1, v2]);
                out_regions.push(region);
            }
        }
    }

    let refined = Mesh2D::new(vertices, out_cells, out_regions, &tags)?;
    Ok((refined, new_values))
}

/// Refines `passes` times along the level set `psi = iso`, where `psi` holds
/// nodal values of a piecewise linear field. A cell is flagged when its
/// vertex values straddle `iso`. Returns the refined mesh and the
/// re-interpolated nodal values.
pub fn refine_along_levelset(mesh: &Mesh2D, psi: &[f64], iso: f64, passes: usize) -> Result<(Mesh2D, Vec<f64>)> {
    let mut current = mesh.clone();
    let mut values = psi.to_vec();
    for _ in 0..passes {
        let marked: Vec<bool> = current
            .cells()
            .iter()
            .map(|cell| {
                let (lo, hi) = cell
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(values[v]), hi.max(values[v])));
                lo <= iso && iso <= hi
            })
            .collect();
        if !marked.iter().any(|&m| m) {
            break;
        }
        let (next, mut vals) = refine_marked(&current, &marked, &[&values])?;
        current = next;
        values = vals.pop().unwrap_or_default();
    }
    Ok((current, values))
}

/// Rotates a counterclockwise cell so its longest edge is `(v1, v2)`,
/// keeping the current rotation on ties.
fn newest_first(cell: &[usize; 3], verts: &[Point2]) -> [usize; 3] {
    let len2 = |i: usize| {
        let d = verts[cell[(i + 1) % 3]] - verts[cell[(i + 2) % 3]];
        d.dot(d)
    };
    let lens = [len2(0), len2(1), len2(2)];
    let max = lens.iter().copied().fold(0.0, f64::max);
    let start = (0..3).find(|&i| lens[i] >= max * (1.0 - 1e-12)).unwrap_or(0);
    [cell[start], cell[(start + 1) % 3], cell[(start + 2) % 3]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    fn r_values(m: &Mesh2D) -> Vec<f64> {
        m.vertices().iter().map(|p| p.r).collect()
    }

    #[test]
    fn nothing_flagged_leaves_mesh_unchanged() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 4, 4).unwrap();
        let psi = r_values(&m);
        let (r, vals) = refine_along_levelset(&m, &psi, 5.0, 3).unwrap();
        assert!(r.same_as(&m));
        assert_eq!(vals, psi);
    }

    #[test]
    fn two_cell_square_is_refined() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 1, 1).unwrap();
        let (r, _) = refine_along_levelset(&m, &r_values(&m), 1.5, 1).unwrap();
        assert!(r.num_cells() > m.num_cells());
        r.check_invariants().unwrap();
    }

    #[test]
    fn band_refinement_is_conforming() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 8, 8).unwrap();
        let (r, vals) = refine_along_levelset(&m, &r_values(&m), 1.5, 1).unwrap();
        assert!(r.num_cells() > m.num_cells());
        r.check_invariants().unwrap();
        // Psi = r is linear, so re-interpolation is exact.
        for (p, v) in r.vertices().iter().zip(&vals) {
            assert!((p.r - v).abs() < 1e-14);
        }
        let (r2, _) = refine_along_levelset(&m, &r_values(&m), 1.5, 3).unwrap();
        r2.check_invariants().unwrap();
        assert!(r2.num_cells() > r.num_cells());
        let area: f64 = (0..r2.num_cells()).map(|c| r2.signed_area(c)).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_tags_follow_bisection() {
        let m = build_structured_mesh(1.0, 2.0, 0.0, 1.0, 2, 2).unwrap();
        let marked = vec![true; m.num_cells()];
        let (r, _) = refine_marked(&m, &marked, &[]).unwrap();
        assert_eq!(r.boundary_edges().len(), m.boundary_edges().len());
        let marked = vec![true; r.num_cells()];
        let (r, _) = refine_marked(&r, &marked, &[]).unwrap();
        r.check_invariants().unwrap();
        assert!(r.boundary_edges().iter().all(|b| b.tag != 0));
        assert_eq!(r.boundary_edges().len(), 2 * m.boundary_edges().len());
    }
}
