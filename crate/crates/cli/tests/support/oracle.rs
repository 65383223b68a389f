//! Dense quadratic minimisation of the simplified majorant over all flux
//! DOFs, with its own basis evaluation and quadrature. Only the DOF layout
//! of the library spaces is shared: vertices first, then edge midpoints in
//! lexicographic local-edge order, vector components stacked.

use majorant_core::fem::{DiscreteField, FESpace};
use majorant_core::mesh::SimplicialMesh;
use majorant_core::parabolic::ProblemSpec;
use nalgebra::{DMatrix, DVector};

/// Gauss-Legendre nodes and weights on (0, 1), exact to degree 11.
pub fn gauss01() -> Vec<(f64, f64)> {
    let x = [
        0.238_619_186_083_196_9,
        0.661_209_386_466_264_5,
        0.932_469_514_203_152_1,
    ];
    let w = [
        0.467_913_934_572_691_05,
        0.360_761_573_048_138_6,
        0.171_324_492_379_170_35,
    ];
    let mut out = Vec::new();
    for i in 0..3 {
        out.push((0.5 * (1.0 - x[i]), 0.5 * w[i]));
        out.push((0.5 * (1.0 + x[i]), 0.5 * w[i]));
    }
    out
}

/// Barycentric points and weights on the reference simplex of dimension 1
/// or 2 (collapsed tensor rule for triangles), weights summing to its measure.
pub fn simplex_rule(dim: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss01();
    match dim {
        1 => g.iter().map(|&(s, w)| ([1.0 - s, s, 0.0], w)).collect(),
        2 => {
            let mut out = Vec::new();
            for &(a, wa) in &g {
                for &(b, wb) in &g {
                    let (x, y) = (a, b * (1.0 - a));
                    out.push(([1.0 - x - y, x, y], wa * wb * (1.0 - a)));
                }
            }
            out
        }
        _ => panic!("oracle supports intervals and triangles only"),
    }
}

pub struct Cell {
    pub det: f64,
    /// physical gradients of the barycentric coordinates
    pub dl: [[f64; 2]; 3],
    pub verts: Vec<[f64; 2]>,
}

pub fn cell(mesh: &SimplicialMesh, c: usize) -> Cell {
    let d = mesh.dim();
    let verts: Vec<[f64; 2]> = mesh
        .cell(c)
        .iter()
        .map(|&v| {
            let p = mesh.vertex(v);
            [p[0], if d > 1 { p[1] } else { 0.0 }]
        })
        .collect();
    let mut dl = [[0.0; 2]; 3];
    let det;
    if d == 1 {
        let h = verts[1][0] - verts[0][0];
        det = h.abs();
        dl[0][0] = -1.0 / h;
        dl[1][0] = 1.0 / h;
    } else {
        let (a, b) = (
            [verts[1][0] - verts[0][0], verts[1][1] - verts[0][1]],
            [verts[2][0] - verts[0][0], verts[2][1] - verts[0][1]],
        );
        let j = a[0] * b[1] - a[1] * b[0];
        det = j.abs();
        // rows of the inverse Jacobian
        dl[1] = [b[1] / j, -b[0] / j];
        dl[2] = [-a[1] / j, a[0] / j];
        dl[0] = [-dl[1][0] - dl[2][0], -dl[1][1] - dl[2][1]];
    }
    Cell { det, dl, verts }
}

fn edges(dim: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..=dim {
        for j in i + 1..=dim {
            e.push((i, j));
        }
    }
    e
}

/// Scalar Lagrange basis values and physical gradients at barycentric `l`.
pub fn basis(dim: usize, degree: usize, cell: &Cell, l: &[f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let nv = dim + 1;
    let (mut phi, mut grad) = (Vec::new(), Vec::new());
    for i in 0..nv {
        if degree == 1 {
            phi.push(l[i]);
            grad.push(cell.dl[i]);
        } else {
            phi.push(l[i] * (2.0 * l[i] - 1.0));
            let s = 4.0 * l[i] - 1.0;
            grad.push([s * cell.dl[i][0], s * cell.dl[i][1]]);
        }
    }
    if degree == 2 {
        for (i, j) in edges(dim) {
            phi.push(4.0 * l[i] * l[j]);
            grad.push([
                4.0 * (l[j] * cell.dl[i][0] + l[i] * cell.dl[j][0]),
                4.0 * (l[j] * cell.dl[i][1] + l[i] * cell.dl[j][1]),
            ]);
        }
    }
    (phi, grad)
}

pub fn point(cell: &Cell, l: &[f64; 3]) -> [f64; 2] {
    let mut p = [0.0; 2];
    for (i, v) in cell.verts.iter().enumerate() {
        p[0] += l[i] * v[0];
        p[1] += l[i] * v[1];
    }
    p
}

/// Value and gradient of a scalar field on cell `c`.
pub fn scalar_at(v: &DiscreteField, c: usize, phi: &[f64], grad: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let dofs = v.space().scalar_dofs(c);
    let (mut val, mut g) = (0.0, [0.0; 2]);
    for (i, &j) in dofs.iter().enumerate() {
        let x = v.dofs()[j];
        val += x * phi[i];
        g[0] += x * grad[i][0];
        g[1] += x * grad[i][1];
    }
    (val, g)
}

/// `J(Y) = Y' H Y + 2 b' Y + c`.
pub struct Quadratic {
    pub h: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl Quadratic {
    fn new(n: usize) -> Quadratic {
        Quadratic {
            h: DMatrix::zeros(n, n),
            b: DVector::zeros(n),
            c: 0.0,
        }
    }

    /// Adds `w (r0 + g . Y)^2` with `g` given sparsely.
    fn add_square(&mut self, w: f64, r0: f64, g: &[(usize, f64)]) {
        self.c += w * r0 * r0;
        for &(i, gi) in g {
            self.b[i] += w * r0 * gi;
            for &(j, gj) in g {
                self.h[(i, j)] += w * gi * gj;
            }
        }
    }

    fn scaled_sum(&self, a: f64, other: &Quadratic, b: f64, constant: f64) -> Quadratic {
        Quadratic {
            h: &self.h * a + &other.h * b,
            b: &self.b * a + &other.b * b,
            c: self.c * a + other.c * b + constant,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let y = DVector::from_column_slice(y);
        (y.transpose() * &self.h * &y)[(0, 0)] + 2.0 * self.b.dot(&y) + self.c
    }

    pub fn minimum(&self) -> f64 {
        let chol = self
            .h
            .clone()
            .cholesky()
            .expect("oracle Hessian is not positive definite");
        let y = chol.solve(&(-&self.b));
        self.c + self.b.dot(&y)
    }
}

/// `sigma ||u_0 - v||^2` over the spatial mesh of `v`.
fn initial_term(spec: &ProblemSpec, v: &DiscreteField) -> f64 {
    let mesh = v.space().mesh();
    let d = mesh.dim();
    let rule = simplex_rule(d);
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        let cl = cell(mesh, c);
        for (l, w) in &rule {
            let (phi, grad) = basis(d, v.space().degree(), &cl, l);
            let (val, _) = scalar_at(v, c, &phi, &grad);
            let x = point(&cl, l);
            let e = spec.u_0.eval(&x[..d], 0.0).unwrap() - val;
            s += w * cl.det * e * e;
        }
    }
    spec.sigma * s
}

/// `(m_d, m_eq)` as quadratics in the end-of-slab flux `Y1` with `y_k`
/// fixed; `A`, `b`, `c` are taken constant.
pub fn slab_parts(
    spec: &ProblemSpec,
    v_k: &DiscreteField,
    v_k1: &DiscreteField,
    y_k: &[f64],
    flux: &FESpace,
    t_k: f64,
    tau: f64,
) -> (Quadratic, Quadratic) {
    let mesh = v_k.space().mesh();
    let d = mesh.dim();
    let n = flux.n_dofs();
    let ns = flux.n_scalar();
    let a = spec.a.eval(&[0.0; 3][..d], 0.0).unwrap();
    let ainv = invert(&a, d);
    let bvec = spec.b.eval(&[0.0; 3][..d], 0.0).unwrap();
    let cc = spec.c.eval(&[0.0; 3][..d], 0.0).unwrap();
    let (mut md, mut meq) = (Quadratic::new(n), Quadratic::new(n));
    let rule = simplex_rule(d);
    let times = gauss01();
    for c in 0..mesh.n_cells() {
        let cl = cell(mesh, c);
        let fd = flux.scalar_dofs(c);
        for (l, w) in &rule {
            let x = point(&cl, l);
            let (pv, gv) = basis(d, v_k.space().degree(), &cl, l);
            let (a0, ga) = scalar_at(v_k, c, &pv, &gv);
            let (a1, gb) = scalar_at(v_k1, c, &pv, &gv);
            let (pf, gf) = basis(d, flux.degree(), &cl, l);
            // y_k and its divergence at x
            let mut y0 = [0.0; 2];
            let mut div0 = 0.0;
            for comp in 0..d {
                for (i, &j) in fd.iter().enumerate() {
                    y0[comp] += y_k[comp * ns + j] * pf[i];
                    div0 += y_k[comp * ns + j] * gf[i][comp];
                }
            }
            for &(s, wt) in &times {
                let t = t_k + s * tau;
                let ww = w * cl.det * wt * tau;
                let v = (1.0 - s) * a0 + s * a1;
                let gvx = [(1.0 - s) * ga[0] + s * gb[0], (1.0 - s) * ga[1] + s * gb[1]];
                let v_t = (a1 - a0) / tau;
                // R_d = (1-s) y_k + s Y1 - A grad v, weighted by A^-1 through
                // its Cholesky factor so each component is a plain square
                let mut rd0 = [0.0; 2];
                for r in 0..d {
                    rd0[r] = (1.0 - s) * y0[r] - (0..d).map(|k| a[r][k] * gvx[k]).sum::<f64>();
                }
                let lt = cholesky_lower_inv(&ainv, d);
                for r in 0..d {
                    // component r of L^T R_d
                    let r0: f64 = (0..d).map(|k| lt[r][k] * rd0[k]).sum();
                    let mut g = Vec::new();
                    for k in 0..d {
                        if lt[r][k] != 0.0 {
                            for (i, &j) in fd.iter().enumerate() {
                                g.push((k * ns + j, lt[r][k] * s * pf[i]));
                            }
                        }
                    }
                    md.add_square(ww, r0, &g);
                }
                let mut r0 =
                    spec.f.eval(&x[..d], t).unwrap() + (1.0 - s) * div0 - spec.sigma * v_t - cc * v;
                r0 -= (0..d).map(|k| bvec[k] * gvx[k]).sum::<f64>();
                let mut g = Vec::new();
                for comp in 0..d {
                    for (i, &j) in fd.iter().enumerate() {
                        g.push((comp * ns + j, s * gf[i][comp]));
                    }
                }
                meq.add_square(ww, r0, &g);
            }
        }
    }
    (md, meq)
}

/// `(m_d, m_eq)` as quadratics in the flux on a space-time mesh with one
/// spatial dimension.
pub fn spacetime_parts(
    spec: &ProblemSpec,
    v: &DiscreteField,
    flux: &FESpace,
) -> (Quadratic, Quadratic) {
    let mesh = v.space().mesh();
    assert_eq!(mesh.dim(), 2);
    let n = flux.n_dofs();
    let a = spec.a.eval(&[0.0], 0.0).unwrap()[0][0];
    let bx = spec.b.eval(&[0.0], 0.0).unwrap()[0];
    let cc = spec.c.eval(&[0.0], 0.0).unwrap();
    let (mut md, mut meq) = (Quadratic::new(n), Quadratic::new(n));
    for c in 0..mesh.n_cells() {
        let cl = cell(mesh, c);
        let fd = flux.scalar_dofs(c);
        for (l, w) in simplex_rule(2) {
            let p = point(&cl, &l);
            let ww = w * cl.det;
            let (pv, gv) = basis(2, v.space().degree(), &cl, &l);
            let (val, g) = scalar_at(v, c, &pv, &gv);
            let (pf, gf) = basis(2, flux.degree(), &cl, &l);
            let r0 = -a * g[0] / a.sqrt();
            let gd: Vec<(usize, f64)> = fd
                .iter()
                .enumerate()
                .map(|(i, &j)| (j, pf[i] / a.sqrt()))
                .collect();
            md.add_square(ww, r0, &gd);
            let r0 = spec.f.eval(&p[..1], p[1]).unwrap() - spec.sigma * g[1] - cc * val - bx * g[0];
            let ge: Vec<(usize, f64)> =
                fd.iter().enumerate().map(|(i, &j)| (j, gf[i][0])).collect();
            meq.add_square(ww, r0, &ge);
        }
    }
    (md, meq)
}

/// `sigma ||u_0 - v(., 0)||^2` for a space-time field with one spatial
/// dimension, integrated along the bottom edges of the mesh.
pub fn spacetime_initial_term(spec: &ProblemSpec, v: &DiscreteField) -> f64 {
    let mesh = v.space().mesh();
    let mut s = 0.0;
    for c in 0..mesh.n_cells() {
        let cl = cell(mesh, c);
        let on: Vec<usize> = (0..3).filter(|&i| cl.verts[i][1].abs() < 1e-14).collect();
        if on.len() != 2 {
            continue;
        }
        let len = (cl.verts[on[0]][0] - cl.verts[on[1]][0]).abs();
        for (sx, w) in gauss01() {
            let mut l = [0.0; 3];
            l[on[0]] = 1.0 - sx;
            l[on[1]] = sx;
            let (pv, gv) = basis(2, v.space().degree(), &cl, &l);
            let (val, _) = scalar_at(v, c, &pv, &gv);
            let x = point(&cl, &l);
            let e = spec.u_0.eval(&x[..1], 0.0).unwrap() - val;
            s += w * len * e * e;
        }
    }
    spec.sigma * s
}

/// The simplified majorant at fixed `beta` as a quadratic.
pub fn majorant_quadratic(
    spec: &ProblemSpec,
    md: &Quadratic,
    meq: &Quadratic,
    beta: f64,
    nu: f64,
    sigma0: f64,
) -> Quadratic {
    let a1 = (1.0 + beta) / nu;
    let a2 = (1.0 + 1.0 / beta) / nu * spec.c_f * spec.c_f / spec.nu_lower;
    md.scaled_sum(a1, meq, a2, sigma0)
}

pub fn slab_initial_term(spec: &ProblemSpec, v_k: &DiscreteField) -> f64 {
    initial_term(spec, v_k)
}

fn invert(a: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    if d == 1 {
        r[0][0] = 1.0 / a[0][0];
    } else {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        r[0][0] = a[1][1] / det;
        r[1][1] = a[0][0] / det;
        r[0][1] = -a[0][1] / det;
        r[1][0] = -a[1][0] / det;
    }
    r
}

/// `L^T` for the Cholesky factor `L L^T = m` of a symmetric 1x1 or 2x2 matrix.
fn cholesky_lower_inv(m: &[[f64; 3]; 3], d: usize) -> [[f64; 2]; 2] {
    let mut lt = [[0.0; 2]; 2];
    let l00 = m[0][0].sqrt();
    lt[0][0] = l00;
    if d == 2 {
        let l10 = m[1][0] / l00;
        lt[0][1] = l10;
        lt[1][1] = (m[1][1] - l10 * l10).sqrt();
    }
    lt
}
