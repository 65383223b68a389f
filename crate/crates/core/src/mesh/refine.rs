use super::{sorted_pair, MarkedSet, MeshError, SimplicialMesh};
use std::collections::HashMap;

/// Result of a refinement: the new mesh and, for every new cell, the index
/// of the cell of the input mesh it descends from.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: SimplicialMesh,
    pub parent: Vec<usize>,
}

struct Work {
    d: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    tags: Vec<u8>,
    alive: Vec<bool>,
    origin: Vec<usize>,
    midpoints: HashMap<[usize; 2], usize>,
    facets: HashMap<Vec<usize>, u16>,
}

impl Work {
    fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.d + 1)..(c + 1) * (self.d + 1)]
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = sorted_pair(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let d = self.d;
        let m = self.coords.len() / d;
        for k in 0..d {
            let x = 0.5 * (self.coords[key[0] * d + k] + self.coords[key[1] * d + k]);
            self.coords.push(x);
        }
        self.midpoints.insert(key, m);
        m
    }

    fn has_hanging_edge(&self, c: usize) -> bool {
        let cell = self.cell(c);
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                if self.midpoints.contains_key(&sorted_pair(cell[i], cell[j])) {
                    return true;
                }
            }
        }
        false
    }

    fn bisect(&mut self, c: usize) {
        let d = self.d;
        let x: Vec<usize> = self.cell(c).to_vec();
        let k = self.tags[c] as usize;
        let (a, b) = (x[0], x[k]);
        let z = self.midpoint(a, b);
        let new_tag = if k > 1 { (k - 1) as u8 } else { d as u8 };

        let mut t1 = Vec::with_capacity(d + 1);
        t1.extend_from_slice(&x[..k]);
        t1.push(z);
        t1.extend_from_slice(&x[k + 1..]);
        let mut t2 = Vec::with_capacity(d + 1);
        t2.extend_from_slice(&x[1..=k]);
        t2.push(z);
        t2.extend_from_slice(&x[k + 1..]);

        // split boundary facets containing the bisected edge
        for &opp in x.iter().filter(|&&v| v != a && v != b) {
            let mut f: Vec<usize> = x.iter().copied().filter(|&v| v != opp).collect();
            f.sort_unstable();
            if let Some(tag) = self.facets.remove(&f) {
                for (old, new) in [(b, z), (a, z)] {
                    let mut g: Vec<usize> =
                        f.iter().map(|&v| if v == old { new } else { v }).collect();
                    g.sort_unstable();
                    self.facets.insert(g, tag);
                }
            }
        }
        self.alive[c] = false;
        let origin = self.origin[c];
        for child in [t1, t2] {
            self.cells.extend_from_slice(&child);
            self.tags.push(new_tag);
            self.alive.push(true);
            self.origin.push(origin);
        }
    }
}

/// Bisects every marked cell once and then bisects further cells until no
/// hanging vertices remain.
pub fn refine(mesh: &SimplicialMesh, marked: &MarkedSet) -> Result<Refinement, MeshError> {
    let n = mesh.n_cells();
    for &c in &marked.cells {
        if c >= n {
            return Err(MeshError::CellIndex {
                index: c,
                n_cells: n,
            });
        }
    }
    let d = mesh.dim();
    let (cells, tags, facets, facet_tags, tag_names) = mesh.raw_parts();
    let mut work = Work {
        d,
        coords: mesh.coords().to_vec(),
        cells: cells.to_vec(),
        tags: tags.to_vec(),
        alive: vec![true; n],
        origin: (0..n).collect(),
        midpoints: HashMap::new(),
        facets: facets
            .chunks(d)
            .zip(facet_tags)
            .map(|(f, &t)| {
                let mut f = f.to_vec();
                f.sort_unstable();
                (f, t)
            })
            .collect(),
    };
    let mut marked_cells = marked.cells.clone();
    marked_cells.sort_unstable();
    marked_cells.dedup();
    for &c in &marked_cells {
        work.bisect(c);
    }
    // Closure. Each sweep visits cells in creation order, so the outcome is
    // deterministic.
    let mut sweeps = 0;
    loop {
        let mut changed = false;
        let mut c = 0;
        while c < work.alive.len() {
            if work.alive[c] && work.has_hanging_edge(c) {
                work.bisect(c);
                changed = true;
            }
            c += 1;
        }
        if !changed {
            break;
        }
        sweeps += 1;
        if sweeps > 200 {
            return Err(MeshError::Closure);
        }
    }

    let mut new_cells = Vec::new();
    let mut new_tags = Vec::new();
    let mut parent = Vec::new();
    for c in 0..work.alive.len() {
        if work.alive[c] {
            new_cells.extend_from_slice(work.cell(c));
            new_tags.push(work.tags[c]);
            parent.push(work.origin[c]);
        }
    }
    let mut boundary: Vec<(Vec<usize>, u16)> = work.facets.into_iter().collect();
    boundary.sort();
    let mut flat = Vec::with_capacity(boundary.len() * d);
    let mut ftags = Vec::with_capacity(boundary.len());
    for (f, t) in boundary {
        flat.extend_from_slice(&f);
        ftags.push(t);
    }
    let mesh = SimplicialMesh::from_raw_unchecked(
        d,
        work.coords,
        new_cells,
        new_tags,
        flat,
        ftags,
        tag_names.to_vec(),
    );
    Ok(Refinement { mesh, parent })
}

/// Refines every cell `d` times, halving the mesh size.
pub fn refine_uniform(mesh: &SimplicialMesh) -> Result<Refinement, MeshError> {
    let mut current = Refinement {
        mesh: mesh.clone(),
        parent: (0..mesh.n_cells()).collect(),
    };
    for _ in 0..mesh.dim() {
        let next = refine(&current.mesh, &super::mark_all(current.mesh.n_cells()))?;
        let parent = next.parent.iter().map(|&p| current.parent[p]).collect();
        current = Refinement {
            mesh: next.mesh,
            parent,
        };
    }
    Ok(current)
}
