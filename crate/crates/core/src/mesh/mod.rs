//! Simplicial meshes in one, two and three dimensions.
//!
//! A cell is stored as an ordered vertex tuple `[x0, .., xd]` together with a
//! bisection tag `k`; the cell's refinement edge is `(x0, xk)`. This is the
//! bookkeeping of Maubach's bisection, which reduces to newest-vertex
//! bisection in two dimensions.

mod audit;
mod io;
mod marking;
mod polygon;
mod refine;

pub use audit::audit;
pub use marking::{mark_all, mark_average, mark_bulk, transfer_indicators, MarkRule, MarkedSet};
pub use polygon::build_polygon_mesh;
pub use refine::{refine, refine_uniform, Refinement};

use std::collections::HashMap;
use thiserror::Error;

pub const DIRICHLET: &str = "dirichlet";
pub const INITIAL: &str = "initial";
pub const FINAL: &str = "final";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid extent on axis {axis}: ({min}, {max})")]
    Extent { axis: usize, min: f64, max: f64 },
    #[error("number of divisions must be at least 1 on every axis")]
    Divisions,
    #[error("unsupported mesh dimension {0}")]
    Dimension(usize),
    #[error("cell {0} has non-positive measure")]
    Degenerate(usize),
    #[error("cell index {index} out of range (mesh has {n_cells} cells)")]
    CellIndex { index: usize, n_cells: usize },
    #[error("polygon is not simple: {0}")]
    Polygon(String),
    #[error("invalid marking input: {0}")]
    Marking(String),
    #[error("mesh file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("refinement closure did not terminate")]
    Closure,
    #[error("mesh is not conforming: {0}")]
    NonConforming(String),
}

#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    tags: Vec<u8>,
    facets: Vec<usize>,
    facet_tags: Vec<u16>,
    tag_names: Vec<String>,
}

impl PartialEq for SimplicialMesh {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.coords == other.coords
            && self.cells == other.cells
            && self.tags == other.tags
            && self.boundary_facets().eq(other.boundary_facets())
    }
}

impl SimplicialMesh {
    /// Assembles a mesh from raw arrays. Boundary facets are given as vertex
    /// tuples with tag strings.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        tags: Vec<u8>,
        boundary: Vec<(Vec<usize>, String)>,
    ) -> Result<SimplicialMesh, MeshError> {
        if !(1..=3).contains(&dim) {
            return Err(MeshError::Dimension(dim));
        }
        let nv = coords.len() / dim;
        assert_eq!(coords.len(), nv * dim);
        assert_eq!(cells.len(), tags.len() * (dim + 1));
        if let Some(&bad) = cells.iter().find(|&&v| v >= nv) {
            return Err(MeshError::Parse {
                line: 0,
                msg: format!("vertex index {bad} out of range"),
            });
        }
        let mut mesh = SimplicialMesh {
            dim,
            coords,
            cells,
            tags,
            facets: Vec::new(),
            facet_tags: Vec::new(),
            tag_names: Vec::new(),
        };
        for (f, tag) in boundary {
            assert_eq!(f.len(), dim);
            let id = mesh.tag_id(&tag);
            mesh.facets.extend_from_slice(&f);
            mesh.facet_tags.push(id);
        }
        for c in 0..mesh.n_cells() {
            if !(mesh.cell_measure(c) > 0.0) {
                return Err(MeshError::Degenerate(c));
            }
        }
        Ok(mesh)
    }

    fn tag_id(&mut self, tag: &str) -> u16 {
        match self.tag_names.iter().position(|t| t == tag) {
            Some(i) => i as u16,
            None => {
                self.tag_names.push(tag.to_string());
                (self.tag_names.len() - 1) as u16
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.tags.len()
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.facet_tags.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.cells.chunks(self.dim + 1)
    }

    pub fn bisection_tag(&self, c: usize) -> usize {
        self.tags[c] as usize
    }

    /// The edge that the next bisection of cell `c` will split.
    pub fn refinement_edge(&self, c: usize) -> (usize, usize) {
        let cell = self.cell(c);
        (cell[0], cell[self.tags[c] as usize])
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (&[usize], &str)> + '_ {
        self.facets
            .chunks(self.dim)
            .zip(&self.facet_tags)
            .map(move |(f, &t)| (f, self.tag_names[t as usize].as_str()))
    }

    /// Vertices lying on a boundary facet whose tag satisfies `pred`.
    pub fn boundary_vertices(&self, pred: impl Fn(&str) -> bool) -> Vec<usize> {
        let mut flag = vec![false; self.n_vertices()];
        for (f, tag) in self.boundary_facets() {
            if pred(tag) {
                for &v in f {
                    flag[v] = true;
                }
            }
        }
        (0..flag.len()).filter(|&v| flag[v]).collect()
    }

    /// Jacobian `J[r][c] = x_{c+1}[r] - x_0[r]` of the affine map from the
    /// reference simplex.
    pub fn jacobian(&self, c: usize) -> [[f64; 3]; 3] {
        let d = self.dim;
        let cell = self.cell(c);
        let x0 = self.vertex(cell[0]);
        let mut j = [[0.0; 3]; 3];
        for col in 0..d {
            let xc = self.vertex(cell[col + 1]);
            for r in 0..d {
                j[r][col] = xc[r] - x0[r];
            }
        }
        j
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        det(&self.jacobian(c), self.dim).abs() / factorial(self.dim)
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_measure(c)).sum()
    }

    /// Longest edge length of the cell.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let mut h: f64 = 0.0;
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                h = h.max(dist(self.vertex(cell[i]), self.vertex(cell[j])));
            }
        }
        h
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn min_diameter(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| self.cell_diameter(c))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_centroid(&self, c: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for &v in self.cell(c) {
            for (xi, pi) in x.iter_mut().zip(self.vertex(v)) {
                *xi += pi;
            }
        }
        let n = (self.dim + 1) as f64;
        x.iter_mut().for_each(|xi| *xi /= n);
        x
    }

    /// Physical point with the given barycentric coordinates in cell `c`.
    pub fn point_at(&self, c: usize, bary: &[f64], out: &mut [f64]) {
        out[..self.dim].iter_mut().for_each(|o| *o = 0.0);
        for (&v, &l) in self.cell(c).iter().zip(bary) {
            for (o, p) in out.iter_mut().zip(self.vertex(v)) {
                *o += l * p;
            }
        }
    }

    /// Bounding box `(min, max)` per axis.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in 0..self.n_vertices() {
            for (a, &x) in self.vertex(v).iter().enumerate() {
                lo[a] = lo[a].min(x);
                hi[a] = hi[a].max(x);
            }
        }
        (lo, hi)
    }

    /// Edges of the mesh (sorted vertex pairs) numbered in order of first
    /// appearance while walking the cells.
    pub fn edge_numbering(&self) -> (Vec<[usize; 2]>, HashMap<[usize; 2], usize>) {
        let mut edges = Vec::new();
        let mut map = HashMap::new();
        for cell in self.cells() {
            for i in 0..cell.len() {
                for j in i + 1..cell.len() {
                    let key = sorted_pair(cell[i], cell[j]);
                    map.entry(key).or_insert_with(|| {
                        edges.push(key);
                        edges.len() - 1
                    });
                }
            }
        }
        (edges, map)
    }

    /// Retags the boundary of a space-time mesh whose last coordinate is time:
    /// facets on `t = t0` become "initial", on `t = t1` become "final",
    /// everything else "dirichlet".
    pub fn tag_spacetime_boundary(&mut self, t0: f64, t1: f64) {
        let d = self.dim;
        let tol = 1e-12 * (t1 - t0).abs().max(1.0);
        let mut new_tags = Vec::with_capacity(self.facet_tags.len());
        let facets: Vec<Vec<usize>> = self.facets.chunks(d).map(|f| f.to_vec()).collect();
        for f in &facets {
            let on = |t: f64| f.iter().all(|&v| (self.vertex(v)[d - 1] - t).abs() <= tol);
            let tag = if on(t0) {
                INITIAL
            } else if on(t1) {
                FINAL
            } else {
                DIRICHLET
            };
            new_tags.push(tag);
        }
        self.facet_tags.clear();
        for tag in new_tags {
            let id = self.tag_id(tag);
            self.facet_tags.push(id);
        }
    }

    /// All facets of the mesh as sorted vertex tuples, with the cells sharing
    /// them.
    pub fn facet_map(&self) -> HashMap<Vec<usize>, Vec<usize>> {
        let mut map: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (c, cell) in self.cells().enumerate() {
            for skip in 0..cell.len() {
                let mut f: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                f.sort_unstable();
                map.entry(f).or_default().push(c);
            }
        }
        map
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[u8], &[usize], &[u16], &[String]) {
        (
            &self.cells,
            &self.tags,
            &self.facets,
            &self.facet_tags,
            &self.tag_names,
        )
    }

    pub(crate) fn from_raw_unchecked(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        tags: Vec<u8>,
        facets: Vec<usize>,
        facet_tags: Vec<u16>,
        tag_names: Vec<String>,
    ) -> SimplicialMesh {
        SimplicialMesh {
            dim,
            coords,
            cells,
            tags,
            facets,
            facet_tags,
            tag_names,
        }
    }
}

pub fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn factorial(d: usize) -> f64 {
    (1..=d).product::<usize>() as f64
}

/// Determinant of the leading `d x d` block.
pub fn det(m: &[[f64; 3]; 3], d: usize) -> f64 {
    match d {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("unsupported dimension {d}"),
    }
}

/// Inverse of the leading `d x d` block.
pub fn inverse(m: &[[f64; 3]; 3], d: usize) -> Option<[[f64; 3]; 3]> {
    let det = det(m, d);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let mut r = [[0.0; 3]; 3];
    match d {
        1 => r[0][0] = 1.0 / m[0][0],
        2 => {
            r[0][0] = m[1][1] / det;
            r[0][1] = -m[0][1] / det;
            r[1][0] = -m[1][0] / det;
            r[1][1] = m[0][0] / det;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
                    let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
                    r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) / det;
                }
            }
        }
        _ => panic!("unsupported dimension {d}"),
    }
    Some(r)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Structured simplicial mesh of an axis-aligned box. Every hypercube is
/// split into `d!` Kuhn simplices sharing its main diagonal; all boundary
/// facets are tagged "dirichlet".
pub fn build_box_mesh(
    extents: &[(f64, f64)],
    divisions: &[usize],
) -> Result<SimplicialMesh, MeshError> {
    let d = extents.len();
    if !(1..=3).contains(&d) || divisions.len() != d {
        return Err(MeshError::Dimension(d));
    }
    for (axis, &(min, max)) in extents.iter().enumerate() {
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(MeshError::Extent { axis, min, max });
        }
    }
    if divisions.iter().any(|&n| n == 0) {
        return Err(MeshError::Divisions);
    }
    let np: Vec<usize> = divisions.iter().map(|n| n + 1).collect();
    let index = |ijk: &[usize]| -> usize {
        let mut idx = 0;
        for a in (0..d).rev() {
            idx = idx * np[a] + ijk[a];
        }
        idx
    };
    let nv: usize = np.iter().product();
    let mut coords = Vec::with_capacity(nv * d);
    for v in 0..nv {
        let mut rest = v;
        for a in 0..d {
            let i = rest % np[a];
            rest /= np[a];
            let (lo, hi) = extents[a];
            let x = if i == divisions[a] {
                hi
            } else {
                lo + (hi - lo) * i as f64 / divisions[a] as f64
            };
            coords.push(x);
        }
    }
    let perms = permutations(d);
    let n_boxes: usize = divisions.iter().product();
    let mut cells = Vec::with_capacity(n_boxes * perms.len() * (d + 1));
    let mut tags = Vec::new();
    for b in 0..n_boxes {
        let mut rest = b;
        let mut base = vec![0usize; d];
        for a in 0..d {
            base[a] = rest % divisions[a];
            rest /= divisions[a];
        }
        for p in &perms {
            let mut corner = base.clone();
            cells.push(index(&corner));
            for &axis in p {
                corner[axis] += 1;
                cells.push(index(&corner));
            }
            tags.push(d as u8);
        }
    }
    let mut mesh = SimplicialMesh {
        dim: d,
        coords,
        cells,
        tags,
        facets: Vec::new(),
        facet_tags: Vec::new(),
        tag_names: Vec::new(),
    };
    let mut boundary: Vec<Vec<usize>> = mesh
        .facet_map()
        .into_iter()
        .filter(|(_, cs)| cs.len() == 1)
        .map(|(f, _)| f)
        .collect();
    boundary.sort();
    let id = mesh.tag_id(DIRICHLET);
    for f in boundary {
        mesh.facets.extend_from_slice(&f);
        mesh.facet_tags.push(id);
    }
    Ok(mesh)
}

/// Friedrichs constant of a box with the given side lengths,
/// `(pi^2 sum 1/L_i^2)^(-1/2)`.
pub fn friedrichs_box(lengths: &[f64]) -> f64 {
    let s: f64 = lengths.iter().map(|l| 1.0 / (l * l)).sum();
    1.0 / (std::f64::consts::PI * s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = build_box_mesh(&[(0.0, 1.0)], &[4]).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (4, 5));
        assert_eq!(m.n_boundary_facets(), 2);
        assert!((m.total_measure() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_counts() {
        let m = build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[3, 3]).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (18, 16));
        assert_eq!(m.n_boundary_facets(), 12);
        let m = build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[8, 8]).unwrap();
        assert_eq!(m.n_cells(), 128);
    }

    #[test]
    fn cube_counts() {
        let m = build_box_mesh(&[(0.0, 1.0), (0.0, 2.0), (0.0, 1.0)], &[2, 2, 2]).unwrap();
        assert_eq!((m.n_cells(), m.n_vertices()), (48, 27));
        assert!((m.total_measure() - 2.0).abs() < 1e-14);
        assert_eq!(m.n_boundary_facets(), 2 * 6 * 4);
        audit(&m).unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_box_mesh(&[(1.0, 1.0)], &[2]),
            Err(MeshError::Extent { axis: 0, .. })
        ));
        assert_eq!(
            build_box_mesh(&[(0.0, 1.0)], &[0]),
            Err(MeshError::Divisions)
        );
    }

    #[test]
    fn spacetime_tags() {
        let mut m = build_box_mesh(&[(0.0, 1.0), (0.0, 2.0)], &[2, 2]).unwrap();
        m.tag_spacetime_boundary(0.0, 2.0);
        let count = |t: &str| m.boundary_facets().filter(|(_, tag)| *tag == t).count();
        assert_eq!((count(INITIAL), count(FINAL), count(DIRICHLET)), (2, 2, 4));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = [[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [1.0, 0.0, 4.0]];
        let r = inverse(&m, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[i][k] * r[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn friedrichs_unit_square() {
        let cf = friedrichs_box(&[1.0, 1.0]);
        assert!((cf - 1.0 / (std::f64::consts::PI * 2f64.sqrt())).abs() < 1e-15);
    }
}
