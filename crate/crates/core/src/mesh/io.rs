//! Plain-text mesh files.
//!
//! ```text
//! dim n_vertices n_cells
//! <n_vertices lines of dim coordinates>
//! <n_cells lines: dim+1 vertex indices followed by the bisection tag>
//! <boundary facet lines: dim vertex indices followed by the tag string>
//! ```
//!
//! Coordinates are written in shortest round-trip form, so reading a written
//! mesh reproduces it bit for bit.

use super::{MeshError, SimplicialMesh};
use std::fmt::Write as _;

impl SimplicialMesh {
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", d, self.n_vertices(), self.n_cells());
        for v in 0..self.n_vertices() {
            let line: Vec<String> = self.vertex(v).iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        for c in 0..self.n_cells() {
            let line: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{} {}", line.join(" "), self.bisection_tag(c));
        }
        for (f, tag) in self.boundary_facets() {
            let line: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{} {}", line.join(" "), tag);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<SimplicialMesh, MeshError> {
        let err = |line: usize, msg: &str| MeshError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln + 1, "bad header")))
            .collect::<Result<_, _>>()?;
        if h.len() != 3 {
            return Err(err(ln + 1, "header must be `dim n_vertices n_cells`"));
        }
        let (d, nv, nc) = (h[0], h[1], h[2]);
        if !(1..=3).contains(&d) {
            return Err(MeshError::Dimension(d));
        }
        let mut coords = Vec::with_capacity(nv * d);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "missing vertex lines"))?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(ln + 1, "bad coordinate")))
                .collect::<Result<_, _>>()?;
            if vals.len() != d {
                return Err(err(ln + 1, "wrong number of coordinates"));
            }
            coords.extend(vals);
        }
        let mut cells = Vec::with_capacity(nc * (d + 1));
        let mut tags = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "missing cell lines"))?;
            let vals: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(ln + 1, "bad cell entry")))
                .collect::<Result<_, _>>()?;
            if vals.len() != d + 2 || vals[d + 1] == 0 || vals[d + 1] > d {
                return Err(err(
                    ln + 1,
                    "cell line must hold dim+1 indices and a tag in 1..=dim",
                ));
            }
            cells.extend_from_slice(&vals[..=d]);
            tags.push(vals[d + 1] as u8);
        }
        let mut boundary = Vec::new();
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != d + 1 {
                return Err(err(ln + 1, "facet line must hold dim indices and a tag"));
            }
            let f: Vec<usize> = toks[..d]
                .iter()
                .map(|t| t.parse().map_err(|_| err(ln + 1, "bad facet index")))
                .collect::<Result<_, _>>()?;
            if f.iter().any(|&v| v >= nv) {
                return Err(err(ln + 1, "facet index out of range"));
            }
            boundary.push((f, toks[d].to_string()));
        }
        SimplicialMesh::new(d, coords, cells, tags, boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_box_mesh, refine, MarkRule, MarkedSet};
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let m = build_box_mesh(&[(0.0, 1.0 / 3.0), (-0.7, 0.1)], &[3, 2]).unwrap();
        let m = refine(
            &m,
            &MarkedSet {
                cells: vec![1, 4],
                rule: MarkRule::Explicit,
            },
        )
        .unwrap()
        .mesh;
        let back = SimplicialMesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn reports_bad_lines() {
        let e = SimplicialMesh::from_text("1 2 1\n0.0\n1.0\n0 1\n").unwrap_err();
        assert!(matches!(e, MeshError::Parse { line: 4, .. }));
    }
}
