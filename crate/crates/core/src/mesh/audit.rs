use super::{inverse, MeshError, SimplicialMesh};
use std::collections::HashSet;

/// Independent consistency check of a mesh.
///
/// Verifies positive cell measures, that every facet is shared by at most two
/// cells lying on opposite sides of it, that the stored boundary facets are
/// exactly the facets owned by a single cell, and that no single-owner facet
/// has mesh material on its outer side (which would indicate a hanging
/// vertex).
pub fn audit(mesh: &SimplicialMesh) -> Result<(), MeshError> {
    let d = mesh.dim();
    let fail = |msg: String| Err(MeshError::NonConforming(msg));
    for c in 0..mesh.n_cells() {
        let h = mesh.cell_diameter(c);
        if !(mesh.cell_measure(c) > 1e-14 * h.powi(d as i32)) {
            return fail(format!("cell {c} is degenerate"));
        }
    }
    let map = mesh.facet_map();
    let stored: HashSet<Vec<usize>> = mesh
        .boundary_facets()
        .map(|(f, _)| {
            let mut f = f.to_vec();
            f.sort_unstable();
            f
        })
        .collect();
    if stored.len() != mesh.n_boundary_facets() {
        return fail("duplicate boundary facet".into());
    }
    let mut keys: Vec<&Vec<usize>> = map.keys().collect();
    keys.sort();
    let mut lonely = Vec::new();
    for f in keys {
        let owners = &map[f];
        match owners.len() {
            1 => {
                if !stored.contains(f) {
                    return fail(format!(
                        "facet {f:?} has one cell but is not a boundary facet"
                    ));
                }
                lonely.push((f.clone(), owners[0]));
            }
            2 => {
                if stored.contains(f) {
                    return fail(format!("boundary facet {f:?} is shared by two cells"));
                }
                let s0 = side(mesh, f, opposite(mesh, owners[0], f));
                let s1 = side(mesh, f, opposite(mesh, owners[1], f));
                if s0 * s1 >= 0.0 {
                    return fail(format!(
                        "cells {} and {} overlap across {f:?}",
                        owners[0], owners[1]
                    ));
                }
            }
            n => return fail(format!("facet {f:?} shared by {n} cells")),
        }
    }
    for f in &stored {
        if !map.contains_key(f) {
            return fail(format!("boundary facet {f:?} belongs to no cell"));
        }
    }
    // bounding boxes for the outside probe
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.n_cells())
        .map(|c| {
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for &v in mesh.cell(c) {
                for (a, &x) in mesh.vertex(v).iter().enumerate() {
                    lo[a] = lo[a].min(x);
                    hi[a] = hi[a].max(x);
                }
            }
            (lo, hi)
        })
        .collect();
    for (f, owner) in lonely {
        let probe = outside_probe(mesh, &f, opposite(mesh, owner, &f));
        for c in 0..mesh.n_cells() {
            let (lo, hi) = &boxes[c];
            if (0..d).any(|a| probe[a] < lo[a] || probe[a] > hi[a]) {
                continue;
            }
            if inside(mesh, c, &probe) {
                return fail(format!(
                    "facet {f:?} of cell {owner} touches cell {c} non-conformingly"
                ));
            }
        }
    }
    Ok(())
}

fn opposite(mesh: &SimplicialMesh, c: usize, f: &[usize]) -> usize {
    *mesh.cell(c).iter().find(|v| !f.contains(v)).unwrap()
}

/// Normal of the facet's hyperplane (unnormalised) via the cofactor trick.
fn normal(mesh: &SimplicialMesh, f: &[usize]) -> Vec<f64> {
    let d = mesh.dim();
    let p0 = mesh.vertex(f[0]);
    match d {
        1 => vec![1.0],
        2 => {
            let p1 = mesh.vertex(f[1]);
            vec![-(p1[1] - p0[1]), p1[0] - p0[0]]
        }
        _ => {
            let a: Vec<f64> = (0..3).map(|k| mesh.vertex(f[1])[k] - p0[k]).collect();
            let b: Vec<f64> = (0..3).map(|k| mesh.vertex(f[2])[k] - p0[k]).collect();
            vec![
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        }
    }
}

fn side(mesh: &SimplicialMesh, f: &[usize], v: usize) -> f64 {
    let n = normal(mesh, f);
    let p0 = mesh.vertex(f[0]);
    mesh.vertex(v)
        .iter()
        .zip(p0)
        .zip(&n)
        .map(|((x, y), n)| (x - y) * n)
        .sum()
}

fn outside_probe(mesh: &SimplicialMesh, f: &[usize], inner: usize) -> Vec<f64> {
    let d = mesh.dim();
    let mut n = normal(mesh, f);
    if side(mesh, f, inner) > 0.0 {
        n.iter_mut().for_each(|x| *x = -*x);
    }
    let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut centroid = vec![0.0; d];
    for &v in f {
        for (c, x) in centroid.iter_mut().zip(mesh.vertex(v)) {
            *c += x / f.len() as f64;
        }
    }
    let scale = f
        .iter()
        .map(|&v| super::dist(mesh.vertex(v), &centroid))
        .fold(0.0, f64::max)
        .max(mesh.cell_diameter(0) * 1e-3);
    let eps = 1e-7 * scale;
    centroid
        .iter()
        .zip(&n)
        .map(|(c, n)| c + eps * n / len)
        .collect()
}

fn inside(mesh: &SimplicialMesh, c: usize, p: &[f64]) -> bool {
    let d = mesh.dim();
    let inv = match inverse(&mesh.jacobian(c), d) {
        Some(m) => m,
        None => return false,
    };
    let x0 = mesh.vertex(mesh.cell(c)[0]);
    let mut sum = 0.0;
    for i in 0..d {
        let l: f64 = (0..d).map(|k| inv[i][k] * (p[k] - x0[k])).sum();
        if l <= 1e-12 {
            return false;
        }
        sum += l;
    }
    1.0 - sum > 1e-12
}
