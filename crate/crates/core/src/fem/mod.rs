//! Lagrange finite-element spaces of degree 1 and 2 on simplicial meshes,
//! discrete fields and the assembly routines.
//!
//! A space may live on a space-time mesh: `spatial_dim` is then one less than
//! the mesh dimension, gradients and divergences are taken in the first
//! `spatial_dim` coordinates only, and the last coordinate is time.
//!
//! Vector spaces have `spatial_dim` components with blocked numbering:
//! global DOF = `component * n_scalar + scalar_dof`.

mod assemble;
pub mod coef;
pub mod quadrature;

pub use assemble::*;
pub use coef::{MatrixCoef, ScalarCoef, VectorCoef};
pub use quadrature::{gauss_interval, gauss_legendre, Quadrature};

use crate::expr::ExprError;
use crate::mesh::{inverse, SimplicialMesh};
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("coefficient matrix is not symmetric positive definite in cell {cell}")]
    NotSpd { cell: usize },
    #[error("coefficient matrix is singular in cell {cell}")]
    Singular { cell: usize },
    #[error("operation needs a vector-valued space")]
    NotVector,
    #[error("operation needs a scalar space")]
    NotScalar,
    #[error("unsupported polynomial degree {0}")]
    Degree(usize),
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("non-finite value produced")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Scalar,
    Vector,
}

#[derive(Debug)]
pub struct FESpace {
    mesh: Arc<SimplicialMesh>,
    family: Family,
    degree: usize,
    spatial_dim: usize,
    n_scalar: usize,
    n_local: usize,
    cell_dofs: Vec<usize>,
    nodes: Vec<f64>,
    edges: HashMap<[usize; 2], usize>,
}

/// Local edges of a simplex in the order used for P2 edge DOFs.
pub fn local_edges(dim: usize) -> Vec<[usize; 2]> {
    let mut e = Vec::new();
    for i in 0..=dim {
        for j in i + 1..=dim {
            e.push([i, j]);
        }
    }
    e
}

pub fn n_local_dofs(dim: usize, degree: usize) -> usize {
    match degree {
        1 => dim + 1,
        2 => (dim + 1) * (dim + 2) / 2,
        _ => 0,
    }
}

impl FESpace {
    pub fn new(
        mesh: Arc<SimplicialMesh>,
        family: Family,
        degree: usize,
        spatial_dim: usize,
    ) -> Result<FESpace, FemError> {
        if !(degree == 1 || degree == 2) {
            return Err(FemError::Degree(degree));
        }
        let d = mesh.dim();
        assert!(spatial_dim >= 1 && spatial_dim <= d);
        let n_local = n_local_dofs(d, degree);
        let nv = mesh.n_vertices();
        let mut nodes = mesh.coords().to_vec();
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * n_local);
        let mut edges = HashMap::new();
        let mut n_scalar = nv;
        if degree == 1 {
            for cell in mesh.cells() {
                cell_dofs.extend_from_slice(cell);
            }
        } else {
            let (edge_list, edge_map) = mesh.edge_numbering();
            for e in &edge_list {
                let (a, b) = (mesh.vertex(e[0]), mesh.vertex(e[1]));
                nodes.extend(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)));
            }
            let le = local_edges(d);
            for cell in mesh.cells() {
                cell_dofs.extend_from_slice(cell);
                for [i, j] in &le {
                    let key = crate::mesh::sorted_pair(cell[*i], cell[*j]);
                    cell_dofs.push(nv + edge_map[&key]);
                }
            }
            n_scalar = nv + edge_list.len();
            edges = edge_map;
        }
        Ok(FESpace {
            mesh,
            family,
            degree,
            spatial_dim,
            n_scalar,
            n_local,
            cell_dofs,
            nodes,
            edges,
        })
    }

    pub fn scalar(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<FESpace, FemError> {
        let d = mesh.dim();
        FESpace::new(mesh, Family::Scalar, degree, d)
    }

    pub fn vector(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<FESpace, FemError> {
        let d = mesh.dim();
        FESpace::new(mesh, Family::Vector, degree, d)
    }

    /// Scalar space on a space-time mesh (last coordinate is time).
    pub fn spacetime_scalar(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<FESpace, FemError> {
        let d = mesh.dim();
        FESpace::new(mesh, Family::Scalar, degree, d - 1)
    }

    /// Spatial-vector space on a space-time mesh.
    pub fn spacetime_vector(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<FESpace, FemError> {
        let d = mesh.dim();
        FESpace::new(mesh, Family::Vector, degree, d - 1)
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn is_spacetime(&self) -> bool {
        self.spatial_dim < self.mesh.dim()
    }

    pub fn components(&self) -> usize {
        match self.family {
            Family::Scalar => 1,
            Family::Vector => self.spatial_dim,
        }
    }

    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    pub fn n_dofs(&self) -> usize {
        self.n_scalar * self.components()
    }

    /// Scalar basis functions per cell.
    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn scalar_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.n_local..(c + 1) * self.n_local]
    }

    /// All DOFs of cell `c`, component-major.
    pub fn cell_dofs_into(&self, c: usize, out: &mut Vec<usize>) {
        out.clear();
        let s = self.scalar_dofs(c);
        for comp in 0..self.components() {
            out.extend(s.iter().map(|&i| comp * self.n_scalar + i));
        }
    }

    /// Coordinates of scalar node `i` (vertex or edge midpoint).
    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.mesh.dim();
        &self.nodes[i * d..(i + 1) * d]
    }

    /// Scalar nodes on boundary facets whose tag satisfies `pred`.
    pub fn boundary_nodes(&self, pred: impl Fn(&str) -> bool) -> Vec<usize> {
        let mut flag = vec![false; self.n_scalar];
        let nv = self.mesh.n_vertices();
        for (f, tag) in self.mesh.boundary_facets() {
            if !pred(tag) {
                continue;
            }
            for &v in f {
                flag[v] = true;
            }
            if self.degree == 2 {
                for i in 0..f.len() {
                    for j in i + 1..f.len() {
                        let key = crate::mesh::sorted_pair(f[i], f[j]);
                        flag[nv + self.edges[&key]] = true;
                    }
                }
            }
        }
        (0..self.n_scalar).filter(|&i| flag[i]).collect()
    }

    /// Default spatial quadrature degree for this space.
    pub fn quad_degree(&self) -> usize {
        2 * self.degree + 2
    }
}

/// Values and barycentric derivatives of the scalar Lagrange basis at a
/// point: `phi[i]` and `dphi[i][k] = d phi_i / d lambda_k`.
pub fn basis_at(dim: usize, degree: usize, l: &[f64; 4], phi: &mut [f64], dphi: &mut [[f64; 4]]) {
    let nv = dim + 1;
    match degree {
        1 => {
            for i in 0..nv {
                phi[i] = l[i];
                dphi[i] = [0.0; 4];
                dphi[i][i] = 1.0;
            }
        }
        2 => {
            for i in 0..nv {
                phi[i] = l[i] * (2.0 * l[i] - 1.0);
                dphi[i] = [0.0; 4];
                dphi[i][i] = 4.0 * l[i] - 1.0;
            }
            for (k, [i, j]) in local_edges(dim).into_iter().enumerate() {
                phi[nv + k] = 4.0 * l[i] * l[j];
                dphi[nv + k] = [0.0; 4];
                dphi[nv + k][i] = 4.0 * l[j];
                dphi[nv + k][j] = 4.0 * l[i];
            }
        }
        _ => unreachable!(),
    }
}

/// Gradients of the barycentric coordinates of cell `c` and `|det J|`.
pub fn cell_geometry(mesh: &SimplicialMesh, c: usize) -> ([[f64; 3]; 4], f64) {
    let d = mesh.dim();
    let j = mesh.jacobian(c);
    let det = crate::mesh::det(&j, d);
    let inv = inverse(&j, d).expect("degenerate cell");
    let mut g = [[0.0; 3]; 4];
    for i in 0..d {
        for k in 0..d {
            g[i + 1][k] = inv[i][k];
            g[0][k] -= inv[i][k];
        }
    }
    (g, det.abs())
}

/// Reference basis tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub rule: Quadrature,
    dim: usize,
    n_local: usize,
    phi: Vec<f64>,
    dphi: Vec<[f64; 4]>,
}

impl Tabulation {
    pub fn new(dim: usize, degree: usize, rule: Quadrature) -> Tabulation {
        let n_local = n_local_dofs(dim, degree);
        let nq = rule.len();
        let mut phi = vec![0.0; nq * n_local];
        let mut dphi = vec![[0.0; 4]; nq * n_local];
        for (q, p) in rule.points.iter().enumerate() {
            basis_at(
                dim,
                degree,
                p,
                &mut phi[q * n_local..(q + 1) * n_local],
                &mut dphi[q * n_local..(q + 1) * n_local],
            );
        }
        Tabulation {
            rule,
            dim,
            n_local,
            phi,
            dphi,
        }
    }

    pub fn for_space(space: &FESpace, quad_degree: usize) -> Tabulation {
        let d = space.mesh().dim();
        Tabulation::new(d, space.degree(), Quadrature::simplex(d, quad_degree))
    }
}

/// Basis values, physical gradients, points and weights on one cell.
#[derive(Debug, Clone)]
pub struct CellValues {
    pub cell: usize,
    pub dim: usize,
    pub spatial_dim: usize,
    pub n_local: usize,
    pub n_q: usize,
    /// time used for coefficients on spatial meshes
    pub time: f64,
    pub measure: f64,
    x: Vec<f64>,
    jxw: Vec<f64>,
    phi: Vec<f64>,
    grad: Vec<f64>,
}

impl CellValues {
    pub fn new(tab: &Tabulation, spatial_dim: usize, time: f64) -> CellValues {
        let nq = tab.rule.len();
        CellValues {
            cell: usize::MAX,
            dim: tab.dim,
            spatial_dim,
            n_local: tab.n_local,
            n_q: nq,
            time,
            measure: 0.0,
            x: vec![0.0; nq * tab.dim],
            jxw: vec![0.0; nq],
            phi: tab.phi.clone(),
            grad: vec![0.0; nq * tab.n_local * tab.dim],
        }
    }

    pub fn reinit(&mut self, tab: &Tabulation, mesh: &SimplicialMesh, c: usize) {
        let d = self.dim;
        let (g, det) = cell_geometry(mesh, c);
        self.cell = c;
        self.measure = det / crate::mesh::factorial(d);
        for q in 0..self.n_q {
            mesh.point_at(
                c,
                &tab.rule.points[q][..=d],
                &mut self.x[q * d..(q + 1) * d],
            );
            self.jxw[q] = tab.rule.weights[q] * det;
            for i in 0..self.n_local {
                let dl = &tab.dphi[q * self.n_local + i];
                let out =
                    &mut self.grad[(q * self.n_local + i) * d..(q * self.n_local + i + 1) * d];
                for k in 0..d {
                    out[k] = (0..=d).map(|m| dl[m] * g[m][k]).sum();
                }
            }
        }
    }

    /// Full coordinates of quadrature point `q`.
    #[inline]
    pub fn point(&self, q: usize) -> &[f64] {
        &self.x[q * self.dim..(q + 1) * self.dim]
    }

    /// Spatial coordinates and time of quadrature point `q`.
    #[inline]
    pub fn xt(&self, q: usize) -> (&[f64], f64) {
        let p = self.point(q);
        if self.spatial_dim < self.dim {
            (&p[..self.spatial_dim], p[self.spatial_dim])
        } else {
            (p, self.time)
        }
    }

    #[inline]
    pub fn jxw(&self, q: usize) -> f64 {
        self.jxw[q]
    }

    #[inline]
    pub fn phi(&self, q: usize, i: usize) -> f64 {
        self.phi[q * self.n_local + i]
    }

    /// Full gradient (all mesh coordinates) of scalar basis function `i`.
    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> &[f64] {
        let d = self.dim;
        &self.grad[(q * self.n_local + i) * d..(q * self.n_local + i + 1) * d]
    }
}

/// DOF vector over a finite-element space.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    space: Arc<FESpace>,
    dofs: Vec<f64>,
}

impl DiscreteField {
    pub fn new(space: Arc<FESpace>, dofs: Vec<f64>) -> DiscreteField {
        assert_eq!(
            dofs.len(),
            space.n_dofs(),
            "DOF vector length does not match space"
        );
        DiscreteField { space, dofs }
    }

    pub fn zeros(space: Arc<FESpace>) -> DiscreteField {
        let n = space.n_dofs();
        DiscreteField::new(space, vec![0.0; n])
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn dofs(&self) -> &[f64] {
        &self.dofs
    }

    pub fn dofs_mut(&mut self) -> &mut [f64] {
        &mut self.dofs
    }

    pub fn into_dofs(self) -> Vec<f64> {
        self.dofs
    }

    pub fn is_finite(&self) -> bool {
        self.dofs.iter().all(|v| v.is_finite())
    }

    /// Evaluates at tabulated quadrature points of a cell: `vals[q * m + comp]`
    /// and `grads[(q * m + comp) * dim + k]` with `m` components.
    pub fn eval_cell(&self, cv: &CellValues, vals: &mut [f64], grads: &mut [f64]) {
        let m = self.space.components();
        let ns = self.space.n_scalar();
        let d = cv.dim;
        let sd = self.space.scalar_dofs(cv.cell);
        vals[..cv.n_q * m].iter_mut().for_each(|v| *v = 0.0);
        grads[..cv.n_q * m * d].iter_mut().for_each(|v| *v = 0.0);
        for q in 0..cv.n_q {
            for comp in 0..m {
                let mut val = 0.0;
                let g = &mut grads[(q * m + comp) * d..(q * m + comp + 1) * d];
                for (i, &s) in sd.iter().enumerate() {
                    let u = self.dofs[comp * ns + s];
                    val += u * cv.phi(q, i);
                    for (gk, bk) in g.iter_mut().zip(cv.grad(q, i)) {
                        *gk += u * bk;
                    }
                }
                vals[q * m + comp] = val;
            }
        }
    }

    /// Values and full gradients at arbitrary barycentric points of cell `c`.
    pub fn eval_bary(
        &self,
        c: usize,
        points: &[[f64; 4]],
        vals: &mut Vec<f64>,
        grads: &mut Vec<f64>,
    ) {
        let mesh = self.space.mesh();
        let d = mesh.dim();
        let m = self.space.components();
        let ns = self.space.n_scalar();
        let nl = self.space.n_local();
        let (g, _) = cell_geometry(mesh, c);
        let sd = self.space.scalar_dofs(c);
        let mut phi = vec![0.0; nl];
        let mut dphi = vec![[0.0; 4]; nl];
        vals.clear();
        vals.resize(points.len() * m, 0.0);
        grads.clear();
        grads.resize(points.len() * m * d, 0.0);
        for (q, l) in points.iter().enumerate() {
            basis_at(d, self.space.degree(), l, &mut phi, &mut dphi);
            for comp in 0..m {
                for (i, &s) in sd.iter().enumerate() {
                    let u = self.dofs[comp * ns + s];
                    vals[q * m + comp] += u * phi[i];
                    for k in 0..d {
                        let gi: f64 = (0..=d).map(|r| dphi[i][r] * g[r][k]).sum();
                        grads[(q * m + comp) * d + k] += u * gi;
                    }
                }
            }
        }
    }

    /// Moves the field to a refinement of its mesh, given the parent cell of
    /// every new cell. Exact, since the meshes are nested.
    pub fn transfer(&self, new_space: Arc<FESpace>, parent: &[usize]) -> DiscreteField {
        let old_mesh = self.space.mesh();
        let new_mesh = new_space.mesh().clone();
        let d = old_mesh.dim();
        let m = self.space.components();
        assert_eq!(m, new_space.components());
        let nsn = new_space.n_scalar();
        let mut dofs = vec![0.0; new_space.n_dofs()];
        let mut done = vec![false; nsn];
        let (mut vals, mut grads) = (Vec::new(), Vec::new());
        for c in 0..new_mesh.n_cells() {
            let p = parent[c];
            let inv = inverse(&old_mesh.jacobian(p), d).expect("degenerate cell");
            let x0 = old_mesh.vertex(old_mesh.cell(p)[0]).to_vec();
            for &s in new_space.scalar_dofs(c) {
                if done[s] {
                    continue;
                }
                done[s] = true;
                let x = new_space.node(s);
                let mut l = [0.0; 4];
                let mut sum = 0.0;
                for i in 0..d {
                    l[i + 1] = (0..d).map(|k| inv[i][k] * (x[k] - x0[k])).sum();
                    sum += l[i + 1];
                }
                l[0] = 1.0 - sum;
                self.eval_bary(p, &[l], &mut vals, &mut grads);
                for comp in 0..m {
                    dofs[comp * nsn + s] = vals[comp];
                }
            }
        }
        DiscreteField::new(new_space, dofs)
    }
}
