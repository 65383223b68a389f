//! The model problem `sigma u_t - div(A grad u) + b . grad u + c u = f` with
//! Dirichlet data on the lateral boundary, and the two ways of computing an
//! approximation: time stepping on a fixed spatial mesh and finite elements
//! on a space-time mesh whose last coordinate is time.

mod error;
mod points;
mod spacetime;
mod stepping;

pub(crate) use error::spatial_l2;
pub use error::{
    energy_error, error_parts, l2_error_at, EnergyError, ErrorParts, ErrorWeights,
    ERROR_QUAD_DEGREE,
};
pub use points::{integrate_cells, integrate_time_face, Approximation, StPoint};
pub use spacetime::{solve_spacetime, spacetime_box_mesh};
pub use stepping::{
    stable_explicit_step, step_explicit, step_implicit, ExplicitStepper, ImplicitStepper,
    StepStatus,
};

use crate::expr::ExprError;
use crate::fem::coef::sym_eig_bounds;
use crate::fem::{DiscreteField, FESpace, FemError, MatrixCoef, ScalarCoef, VectorCoef};
use crate::linsolve::SolveError;
use crate::mesh::{build_box_mesh, build_polygon_mesh, friedrichs_box, MeshError, SimplicialMesh};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParabolicError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("the problem has no exact solution")]
    MissingExact,
}

impl From<ExprError> for ParabolicError {
    fn from(e: ExprError) -> Self {
        ParabolicError::Fem(FemError::Expr(e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Axis-aligned box, one `(min, max)` per axis.
    Box(Vec<(f64, f64)>),
    /// Simple polygon in the plane.
    Polygon(Vec<[f64; 2]>),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(e) => e.len(),
            Domain::Polygon(_) => 2,
        }
    }

    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Domain::Box(e) => e.clone(),
            Domain::Polygon(p) => {
                let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); 2];
                for q in p {
                    for a in 0..2 {
                        bb[a].0 = bb[a].0.min(q[a]);
                        bb[a].1 = bb[a].1.max(q[a]);
                    }
                }
                bb
            }
        }
    }

    /// Friedrichs constant of the bounding box. Zero extension makes it a
    /// valid constant for any subdomain.
    pub fn friedrichs_constant(&self) -> f64 {
        let l: Vec<f64> = self.bounding_box().iter().map(|(a, b)| b - a).collect();
        friedrichs_box(&l)
    }

    /// Initial mesh: `n` intervals per axis for boxes, target edge length
    /// `(largest extent) / n` for polygons.
    pub fn mesh(&self, n: usize) -> Result<SimplicialMesh, MeshError> {
        match self {
            Domain::Box(e) => build_box_mesh(e, &vec![n.max(1); e.len()]),
            Domain::Polygon(p) => {
                let bb = self.bounding_box();
                let ext = bb.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
                build_polygon_mesh(p, ext / n.max(1) as f64)
            }
        }
    }
}

/// Coefficients and data of the initial-boundary value problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    pub domain: Domain,
    pub sigma: f64,
    pub a: MatrixCoef,
    pub b: VectorCoef,
    pub c: ScalarCoef,
    pub f: ScalarCoef,
    pub u_d: ScalarCoef,
    pub u_0: ScalarCoef,
    pub t_final: f64,
    pub c_f: f64,
    /// Ellipticity bounds of `A`.
    pub nu_lower: f64,
    pub nu_upper: f64,
    pub exact: Option<ScalarCoef>,
}

impl ProblemSpec {
    /// Heat equation with unit coefficients and zero data on `domain`.
    pub fn new(domain: Domain) -> ProblemSpec {
        let dim = domain.dim();
        ProblemSpec {
            dim,
            sigma: 1.0,
            a: MatrixCoef::identity(dim),
            b: VectorCoef::zero(dim),
            c: ScalarCoef::constant(0.0),
            f: ScalarCoef::constant(0.0),
            u_d: ScalarCoef::constant(0.0),
            u_0: ScalarCoef::constant(0.0),
            t_final: 1.0,
            c_f: domain.friedrichs_constant(),
            nu_lower: 1.0,
            nu_upper: 1.0,
            exact: None,
            domain,
        }
    }

    pub fn has_transport(&self) -> bool {
        !(self.b.is_zero() && self.c.is_zero())
    }

    /// `delta^2 = c - div b / 2`.
    pub fn delta_sq(&self, x: &[f64], t: f64) -> Result<f64, ExprError> {
        let c = self.c.eval(x, t)?;
        if self.b.is_zero() {
            return Ok(c);
        }
        Ok(c - 0.5 * self.b.div(x, t)?)
    }

    /// `true` when any operator coefficient depends on time.
    pub fn operator_depends_on_t(&self) -> bool {
        let d = self.dim;
        (0..d).any(|i| (0..d).any(|j| self.a.entry(i, j).expr().depends_on_t()))
            || (0..self.b.dim()).any(|i| self.b.component(i).expr().depends_on_t())
            || self.c.expr().depends_on_t()
    }

    /// Checks the scalar data and samples ellipticity of `A` and positivity
    /// of `delta^2` at cell centroids for a few times in `[0, T]`.
    pub fn validate(&self, mesh: &SimplicialMesh) -> Result<(), ParabolicError> {
        let bad = |m: String| Err(ParabolicError::Invalid(m));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be positive", self.sigma));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("final time {} must be positive", self.t_final));
        }
        if !(self.c_f > 0.0 && self.c_f.is_finite()) {
            return bad(format!("Friedrichs constant {} must be positive", self.c_f));
        }
        if !(self.nu_lower > 0.0 && self.nu_lower <= self.nu_upper) {
            return bad(format!(
                "ellipticity bounds ({}, {}) must satisfy 0 < lower <= upper",
                self.nu_lower, self.nu_upper
            ));
        }
        if self.a.dim() != self.dim || self.b.dim() != self.dim || mesh.dim() != self.dim {
            return bad("dimension mismatch between mesh and coefficients".into());
        }
        let (lo, hi) = sample_ellipticity(&self.a, mesh, self.t_final)?;
        let slack = 1e-10 * hi.abs().max(1.0);
        if lo < self.nu_lower - slack || hi > self.nu_upper + slack {
            return bad(format!(
                "sampled eigenvalues of A lie in [{lo}, {hi}], outside the declared [{}, {}]",
                self.nu_lower, self.nu_upper
            ));
        }
        if self.has_transport() {
            for c in 0..mesh.n_cells() {
                let x = mesh.cell_centroid(c);
                for t in sample_times(self.t_final) {
                    let d2 = self.delta_sq(&x, t)?;
                    if !(d2 > 0.0) {
                        return bad(format!(
                            "c - div(b)/2 = {d2} is not positive at {x:?}, t = {t}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn sample_times(t_final: f64) -> [f64; 3] {
    [0.0, 0.5 * t_final, t_final]
}

/// Smallest and largest eigenvalue of the symmetric part of `A` sampled at
/// vertices and cell centroids.
pub fn sample_ellipticity(
    a: &MatrixCoef,
    mesh: &SimplicialMesh,
    t_final: f64,
) -> Result<(f64, f64), ExprError> {
    let d = a.dim();
    if let Some(m) = a.as_constant() {
        return Ok(sym_eig_bounds(&m, d));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut pts: Vec<Vec<f64>> = (0..mesh.n_vertices())
        .map(|v| mesh.vertex(v).to_vec())
        .collect();
    pts.extend((0..mesh.n_cells()).map(|c| mesh.cell_centroid(c)));
    for p in &pts {
        for t in sample_times(t_final) {
            let (l, h) = sym_eig_bounds(&a.eval(&p[..d], t)?, d);
            lo = lo.min(l);
            hi = hi.max(h);
        }
    }
    Ok((lo, hi))
}

/// Breakpoints `0 = t^0 < ... < t^K = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<TimeGrid, ParabolicError> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(ParabolicError::Invalid(
                "time grid needs t^0 = 0 and at least one slab".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || !points.iter().all(|t| t.is_finite()) {
            return Err(ParabolicError::Invalid(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid { points })
    }

    pub fn uniform(t_final: f64, k: usize) -> Result<TimeGrid, ParabolicError> {
        if k == 0 || !(t_final > 0.0) {
            return Err(ParabolicError::Invalid(format!(
                "cannot split [0, {t_final}] into {k} slabs"
            )));
        }
        let mut p: Vec<f64> = (0..k).map(|i| t_final * i as f64 / k as f64).collect();
        p.push(t_final);
        TimeGrid::new(p)
    }

    pub fn n_slabs(&self) -> usize {
        self.points.len() - 1
    }

    pub fn t(&self, k: usize) -> f64 {
        self.points[k]
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.points[k + 1] - self.points[k]
    }

    pub fn t_final(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

/// Approximations at both ends of the slab `(t_k, t_k + tau)`; in between
/// the field is the linear interpolant in time.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub v_k: DiscreteField,
    pub v_k1: DiscreteField,
    pub t_k: f64,
    pub tau: f64,
    pub k: usize,
}

impl SlabSolution {
    pub fn approximation<'a>(
        &'a self,
        y: Option<(&'a DiscreteField, &'a DiscreteField)>,
    ) -> Approximation<'a> {
        Approximation::Slab {
            v_k: &self.v_k,
            v_k1: &self.v_k1,
            y,
            t_k: self.t_k,
            tau: self.tau,
        }
    }
}

/// Nodal interpolant of `e` at time `t`. On a space-time space the last node
/// coordinate is used as the time and `t` is ignored.
pub fn interpolate(
    e: &ScalarCoef,
    space: &Arc<FESpace>,
    t: f64,
) -> Result<DiscreteField, FemError> {
    if space.components() != 1 {
        return Err(FemError::NotScalar);
    }
    let sd = space.spatial_dim();
    let st = space.is_spacetime();
    let mut dofs = Vec::with_capacity(space.n_dofs());
    for i in 0..space.n_scalar() {
        let p = space.node(i);
        let ti = if st { p[sd] } else { t };
        dofs.push(e.eval(&p[..sd], ti)?);
    }
    Ok(DiscreteField::new(space.clone(), dofs))
}

/// Scalar nodes on Dirichlet facets and their data at time `t`.
pub(crate) fn dirichlet_values(
    spec: &ProblemSpec,
    space: &FESpace,
    t: f64,
) -> Result<Vec<(usize, f64)>, ExprError> {
    let sd = space.spatial_dim();
    space
        .boundary_nodes(|tag| tag == crate::mesh::DIRICHLET)
        .into_iter()
        .map(|i| Ok((i, spec.u_d.eval(&space.node(i)[..sd], t)?)))
        .collect()
}
