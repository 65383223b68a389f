//! Quality triangulation of simple polygons: Bowyer-Watson insertion
//! followed by Ruppert-style Delaunay refinement (encroached boundary
//! segments are split at their midpoints, bad triangles receive their
//! circumcentre).

use super::{MeshError, SimplicialMesh, DIRICHLET};
use std::collections::HashMap;

const MIN_ANGLE_DEG: f64 = 20.0;
const MAX_INSERTIONS: usize = 200_000;

type P = [f64; 2];

fn coord(p: P) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

/// Twice the signed area of `abc` (exact sign).
fn orient(a: P, b: P, c: P) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `abc` (exact sign).
fn in_circle(a: P, b: P, c: P, d: P) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

fn circumcenter(a: P, b: P, c: P) -> P {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [
        a[0] + (cy * b2 - by * c2) / d,
        a[1] + (bx * c2 - cx * b2) / d,
    ]
}

fn len(a: P, b: P) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn segments_intersect(p1: P, p2: P, q1: P, q2: P) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: P, b: P, p: P, o: f64| {
        o == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn point_in_polygon(poly: &[P], p: P) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1])
            && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn check_simple(poly: &[P]) -> Result<(), MeshError> {
    let n = poly.len();
    if n < 3 {
        return Err(MeshError::Polygon("fewer than three vertices".into()));
    }
    for i in 0..n {
        if poly[i] == poly[(i + 1) % n] {
            return Err(MeshError::Polygon(format!("repeated vertex {i}")));
        }
        if !poly[i][0].is_finite() || !poly[i][1].is_finite() {
            return Err(MeshError::Polygon(format!("non-finite vertex {i}")));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (p1, p2) = (poly[i], poly[(i + 1) % n]);
            let (q1, q2) = (poly[j], poly[(j + 1) % n]);
            if adjacent {
                // adjacent edges may only share their common vertex
                let (shared, a, b) = if j == i + 1 {
                    (p2, p1, q2)
                } else {
                    (p1, p2, q1)
                };
                let o = orient(shared, a, b);
                let dot = (a[0] - shared[0]) * (b[0] - shared[0])
                    + (a[1] - shared[1]) * (b[1] - shared[1]);
                if o == 0.0 && dot > 0.0 {
                    return Err(MeshError::Polygon(format!("edges {i} and {j} overlap")));
                }
            } else if segments_intersect(p1, p2, q1, q2) {
                return Err(MeshError::Polygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

struct Delaunay {
    pts: Vec<P>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
}

impl Delaunay {
    fn insert(&mut self, p: P) -> usize {
        let idx = self.pts.len();
        self.pts.push(p);
        let mut edges: HashMap<[usize; 2], (usize, [usize; 2])> = HashMap::new();
        let mut cavity = Vec::new();
        for t in 0..self.tris.len() {
            if !self.alive[t] {
                continue;
            }
            let [a, b, c] = self.tris[t];
            if in_circle(self.pts[a], self.pts[b], self.pts[c], p) > 0.0 {
                cavity.push(t);
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
            let [a, b, c] = self.tris[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let key = if u < v { [u, v] } else { [v, u] };
                edges.entry(key).or_insert((0, [u, v])).0 += 1;
            }
        }
        let mut boundary: Vec<[usize; 2]> = edges
            .values()
            .filter(|(n, _)| *n == 1)
            .map(|(_, e)| *e)
            .collect();
        boundary.sort_unstable();
        for [u, v] in boundary {
            self.tris.push([u, v, idx]);
            self.alive.push(true);
        }
        if self.tris.len() > 4 * self.alive.iter().filter(|&&a| a).count() + 64 {
            self.compact();
        }
        idx
    }

    fn compact(&mut self) {
        let keep: Vec<[usize; 3]> = self
            .tris
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| a)
            .map(|(t, _)| *t)
            .collect();
        self.alive = vec![true; keep.len()];
        self.tris = keep;
    }
}

/// Triangulates a simple polygon (vertex loop, either orientation) with
/// maximum edge length `target_h` and minimum angle 20 degrees. Boundary
/// facets are tagged "dirichlet".
pub fn build_polygon_mesh(
    polygon: &[[f64; 2]],
    target_h: f64,
) -> Result<SimplicialMesh, MeshError> {
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(MeshError::Polygon(format!(
            "target_h = {target_h} must be positive"
        )));
    }
    check_simple(polygon)?;
    let mut poly = polygon.to_vec();
    let area2: f64 = (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    if area2 < 0.0 {
        poly.reverse();
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &poly {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let mut dt = Delaunay {
        pts: vec![
            [mid[0] - 50.0 * size, mid[1] - 50.0 * size],
            [mid[0] + 50.0 * size, mid[1] - 50.0 * size],
            [mid[0], mid[1] + 50.0 * size],
        ],
        tris: vec![[0, 1, 2]],
        alive: vec![true],
    };

    // boundary points and segments
    let mut segments: Vec<[usize; 2]> = Vec::new();
    let mut loop_ids = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let m = (len(a, b) / target_h).ceil().max(1.0) as usize;
        for s in 0..m {
            let f = s as f64 / m as f64;
            loop_ids.push(dt.insert([a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]));
        }
    }
    for i in 0..loop_ids.len() {
        segments.push([loop_ids[i], loop_ids[(i + 1) % loop_ids.len()]]);
    }

    let encroaches = |pts: &[P], s: [usize; 2], p: usize| -> bool {
        if p == s[0] || p == s[1] || p < 3 {
            return false;
        }
        let (a, b, q) = (pts[s[0]], pts[s[1]], pts[p]);
        let dot = (q[0] - a[0]) * (q[0] - b[0]) + (q[1] - a[1]) * (q[1] - b[1]);
        dot < -1e-14 * len(a, b).powi(2)
    };

    let min_sin = MIN_ANGLE_DEG.to_radians().sin();
    let mut insertions = 0;
    let mut queue: Vec<usize> = (0..segments.len()).collect();
    loop {
        // split encroached segments first
        while let Some(s) = queue.pop() {
            let seg = segments[s];
            let enc = (3..dt.pts.len()).any(|p| encroaches(&dt.pts, seg, p));
            if !enc {
                continue;
            }
            let (a, b) = (dt.pts[seg[0]], dt.pts[seg[1]]);
            let m = dt.insert([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            insertions += 1;
            segments[s] = [seg[0], m];
            segments.push([m, seg[1]]);
            queue.push(s);
            queue.push(segments.len() - 1);
            for (k, &other) in segments.iter().enumerate() {
                if encroaches(&dt.pts, other, m) {
                    queue.push(k);
                }
            }
        }
        if insertions > MAX_INSERTIONS {
            return Err(MeshError::Polygon(
                "mesh refinement did not terminate".into(),
            ));
        }

        let mut bad = None;
        for (t, tri) in dt.tris.iter().enumerate() {
            if !dt.alive[t] || tri.iter().any(|&v| v < 3) {
                continue;
            }
            let [a, b, c] = tri.map(|v| dt.pts[v]);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            if !point_in_polygon(&poly, centroid) {
                continue;
            }
            let (la, lb, lc) = (len(b, c), len(c, a), len(a, b));
            let lmax = la.max(lb).max(lc);
            let area2 = orient(a, b, c).abs();
            // smallest angle sine via the law of sines: sin(A) = 2 area / (b c)
            let sin_min = [area2 / (lb * lc), area2 / (lc * la), area2 / (la * lb)]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if lmax > target_h * (1.0 + 1e-12) || sin_min < min_sin {
                bad = Some([a, b, c]);
                break;
            }
        }
        let Some([a, b, c]) = bad else { break };
        let cc = circumcenter(a, b, c);
        let probe = dt.pts.len();
        dt.pts.push(cc);
        let encroached: Vec<usize> = (0..segments.len())
            .filter(|&k| encroaches(&dt.pts, segments[k], probe))
            .collect();
        dt.pts.pop();
        if !encroached.is_empty() {
            // force the split even though no mesh vertex encroaches yet
            for &k in &encroached {
                let seg = segments[k];
                let (p, q) = (dt.pts[seg[0]], dt.pts[seg[1]]);
                let m = dt.insert([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                insertions += 1;
                segments[k] = [seg[0], m];
                segments.push([m, seg[1]]);
                queue.push(k);
                queue.push(segments.len() - 1);
                for (j, &other) in segments.iter().enumerate() {
                    if encroaches(&dt.pts, other, m) {
                        queue.push(j);
                    }
                }
            }
        } else if point_in_polygon(&poly, cc) {
            dt.insert(cc);
            insertions += 1;
        } else {
            dt.insert([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
            insertions += 1;
        }
        if insertions > MAX_INSERTIONS {
            return Err(MeshError::Polygon(
                "mesh refinement did not terminate".into(),
            ));
        }
    }

    // collect interior triangles and renumber vertices
    let mut renum = vec![usize::MAX; dt.pts.len()];
    let mut coords = Vec::new();
    let mut cells = Vec::new();
    let mut n_cells = 0;
    for (t, tri) in dt.tris.iter().enumerate() {
        if !dt.alive[t] || tri.iter().any(|&v| v < 3) {
            continue;
        }
        let [a, b, c] = tri.map(|v| dt.pts[v]);
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        if !point_in_polygon(&poly, centroid) {
            continue;
        }
        // put the longest edge between positions 0 and 2
        let lens = [len(b, c), len(c, a), len(a, b)];
        let opp = (0..3).fold(0, |best, i| if lens[i] > lens[best] { i } else { best });
        let order = [tri[(opp + 1) % 3], tri[opp], tri[(opp + 2) % 3]];
        for v in order {
            if renum[v] == usize::MAX {
                renum[v] = coords.len() / 2;
                coords.extend_from_slice(&dt.pts[v]);
            }
            cells.push(renum[v]);
        }
        n_cells += 1;
    }
    let mut edge_count: HashMap<[usize; 2], usize> = HashMap::new();
    for cell in cells.chunks(3) {
        for (u, v) in [(cell[0], cell[1]), (cell[1], cell[2]), (cell[2], cell[0])] {
            *edge_count.entry(super::sorted_pair(u, v)).or_default() += 1;
        }
    }
    let mut boundary: Vec<[usize; 2]> = edge_count
        .into_iter()
        .filter(|(_, n)| *n == 1)
        .map(|(e, _)| e)
        .collect();
    boundary.sort_unstable();
    SimplicialMesh::new(
        2,
        coords,
        cells,
        vec![2; n_cells],
        boundary
            .into_iter()
            .map(|e| (e.to_vec(), DIRICHLET.to_string()))
            .collect(),
    )
}
