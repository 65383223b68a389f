//! Adaptive refinement driven by the true error or by the flux indicator,
//! slab by slab for time stepping and globally on space-time meshes.

use crate::fem::FESpace;
use crate::majorant::{
    optimize_flux_spacetime, project_flux, MajorantError, MajorantParams, MajorantReport,
    SlabOptimizer,
};
use crate::mesh::{
    mark_all, mark_average, mark_bulk, refine, refine_uniform, MarkedSet, MeshError, SimplicialMesh,
};
use crate::parabolic::{
    error_parts, interpolate, l2_error_at, solve_spacetime, spacetime_box_mesh, Approximation,
    Domain, ImplicitStepper, ParabolicError, ProblemSpec, SlabSolution, TimeGrid,
};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error("refinement by the true error needs an exact solution")]
    MissingExact,
}

impl From<ParabolicError> for AdaptError {
    fn from(e: ParabolicError) -> Self {
        AdaptError::Majorant(e.into())
    }
}

impl From<MeshError> for AdaptError {
    fn from(e: MeshError) -> Self {
        AdaptError::Majorant(ParabolicError::from(e).into())
    }
}

impl From<crate::fem::FemError> for AdaptError {
    fn from(e: crate::fem::FemError) -> Self {
        AdaptError::Majorant(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Per-cell `||grad e||^2_A + ||delta e||^2`.
    TrueError,
    /// Per-cell `||y - A grad v||^2_{A^-1}`.
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marking {
    Bulk(f64),
    Average,
    All,
}

impl Marking {
    pub fn mark(&self, indicators: &[f64]) -> Result<MarkedSet, MeshError> {
        match *self {
            Marking::Bulk(theta) => mark_bulk(indicators, theta),
            Marking::Average => mark_average(indicators),
            Marking::All => Ok(mark_all(indicators.len())),
        }
    }
}

fn indicators(
    spec: &ProblemSpec,
    approx: &Approximation,
    report: &MajorantReport,
    criterion: Criterion,
) -> Result<Vec<f64>, AdaptError> {
    match criterion {
        Criterion::Indicator => Ok(report.per_cell_md.clone()),
        Criterion::TrueError => {
            if spec.exact.is_none() {
                return Err(AdaptError::MissingExact);
            }
            let p = error_parts(spec, approx)?;
            Ok(p.per_cell_d
                .iter()
                .zip(&p.per_cell_delta)
                .map(|(a, b)| a + b)
                .collect())
        }
    }
}

/// Final state of one slab of an adaptive time-stepping run.
#[derive(Debug, Clone)]
pub struct SlabStep {
    pub k: usize,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub report: MajorantReport,
    pub accumulated_majorant: f64,
    pub accumulated_error: Option<f64>,
    /// Indicators that drove the last refinement pass on this slab.
    pub indicators: Vec<f64>,
    pub mesh: Arc<SimplicialMesh>,
}

/// Time stepping where each slab is solved, estimated and refined up to
/// `max_ref_per_slab` times before moving on; the refined mesh carries over
/// to the next slab. On the first slab the initial data is interpolated on
/// every new mesh, later slabs transfer the previous solution and flux.
#[allow(clippy::too_many_arguments)]
pub fn adapt_slab_loop(
    spec: &ProblemSpec,
    initial_mesh: Arc<SimplicialMesh>,
    grid: &TimeGrid,
    params: &MajorantParams,
    marking: Marking,
    criterion: Criterion,
    max_ref_per_slab: usize,
    degree: usize,
) -> Result<Vec<SlabStep>, AdaptError> {
    adapt_slab_loop_observed(
        spec,
        initial_mesh,
        grid,
        params,
        marking,
        criterion,
        max_ref_per_slab,
        degree,
        |_| {},
    )
}

/// [`adapt_slab_loop`] calling `on_step` as soon as each slab is final.
#[allow(clippy::too_many_arguments)]
pub fn adapt_slab_loop_observed(
    spec: &ProblemSpec,
    initial_mesh: Arc<SimplicialMesh>,
    grid: &TimeGrid,
    params: &MajorantParams,
    marking: Marking,
    criterion: Criterion,
    max_ref_per_slab: usize,
    degree: usize,
    mut on_step: impl FnMut(&SlabStep),
) -> Result<Vec<SlabStep>, AdaptError> {
    if criterion == Criterion::TrueError && spec.exact.is_none() {
        return Err(AdaptError::MissingExact);
    }
    let mut mesh = initial_mesh;
    let mut space = Arc::new(FESpace::scalar(mesh.clone(), degree)?);
    let mut opt = SlabOptimizer::new(spec, params, mesh.clone())?;
    let mut v = interpolate(&spec.u_0, &space, 0.0)?;
    let mut y = project_flux(spec, &v, opt.flux_space(), 0.0)?;
    let mut out = Vec::with_capacity(grid.n_slabs());
    let (mut acc_m, mut acc_e) = (0.0, Some(0.0));
    for k in 0..grid.n_slabs() {
        let (t_k, tau) = (grid.t(k), grid.tau(k));
        let mut pass = 0;
        loop {
            let v1 = ImplicitStepper::new(spec, space.clone())?.step(&v, t_k, tau)?;
            let slab = SlabSolution {
                v_k: v.clone(),
                v_k1: v1,
                t_k,
                tau,
                k,
            };
            let (y1, report) = opt.optimize(&slab, &y)?;
            let ind = indicators(spec, &slab.approximation(None), &report, criterion)?;
            if pass < max_ref_per_slab {
                let marked = marking.mark(&ind)?;
                if !marked.is_empty() {
                    let r = refine(&mesh, &marked)?;
                    mesh = Arc::new(r.mesh);
                    space = Arc::new(FESpace::scalar(mesh.clone(), degree)?);
                    let beta = opt.params().beta;
                    opt = SlabOptimizer::new(spec, params, mesh.clone())?;
                    opt.carry_beta(beta);
                    if k == 0 {
                        v = interpolate(&spec.u_0, &space, 0.0)?;
                        y = project_flux(spec, &v, opt.flux_space(), 0.0)?;
                    } else {
                        v = v.transfer(space.clone(), &r.parent);
                        y = y.transfer(opt.flux_space().clone(), &r.parent);
                    }
                    pass += 1;
                    continue;
                }
            }
            opt.carry_beta(report.beta_final);
            acc_m += report.total;
            acc_e = match (acc_e, report.error_combined) {
                (Some(a), Some(e)) => Some(a + e),
                _ => None,
            };
            let final_error = match spec.exact {
                Some(_) => Some(spec.sigma * l2_error_at(spec, &slab.v_k1, t_k + tau)?),
                None => None,
            };
            out.push(SlabStep {
                k,
                n_cells: mesh.n_cells(),
                n_dofs: space.n_dofs(),
                accumulated_majorant: acc_m,
                accumulated_error: acc_e.zip(final_error).map(|(a, f)| a + f),
                indicators: ind,
                mesh: mesh.clone(),
                report,
            });
            on_step(out.last().unwrap());
            v = slab.v_k1;
            y = y1;
            break;
        }
    }
    Ok(out)
}

/// One refinement level of an adaptive space-time run.
#[derive(Debug, Clone)]
pub struct SpacetimeStep {
    pub level: usize,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub report: MajorantReport,
    pub indicators: Vec<f64>,
    pub mesh: Arc<SimplicialMesh>,
}

/// Solve, estimate, mark and refine on the space-time mesh `n_ref` times;
/// returns the `n_ref + 1` levels including the initial one.
pub fn adapt_spacetime_loop(
    spec: &ProblemSpec,
    initial: Arc<SimplicialMesh>,
    params: &MajorantParams,
    marking: Marking,
    criterion: Criterion,
    n_ref: usize,
) -> Result<Vec<SpacetimeStep>, AdaptError> {
    adapt_spacetime_loop_observed(spec, initial, params, marking, criterion, n_ref, |_| {})
}

/// [`adapt_spacetime_loop`] calling `on_step` after each level.
pub fn adapt_spacetime_loop_observed(
    spec: &ProblemSpec,
    initial: Arc<SimplicialMesh>,
    params: &MajorantParams,
    marking: Marking,
    criterion: Criterion,
    n_ref: usize,
    mut on_step: impl FnMut(&SpacetimeStep),
) -> Result<Vec<SpacetimeStep>, AdaptError> {
    if criterion == Criterion::TrueError && spec.exact.is_none() {
        return Err(AdaptError::MissingExact);
    }
    let mut mesh = initial;
    let mut out = Vec::with_capacity(n_ref + 1);
    for level in 0..=n_ref {
        let v = solve_spacetime(spec, mesh.clone())?;
        let (_, report) = optimize_flux_spacetime(spec, &v, params)?;
        let ind = indicators(
            spec,
            &Approximation::SpaceTime { v: &v, y: None },
            &report,
            criterion,
        )?;
        let n_dofs = v.space().n_dofs();
        let next = if level < n_ref {
            let marked = marking.mark(&ind)?;
            if marked.is_empty() {
                None
            } else {
                Some(Arc::new(refine(&mesh, &marked)?.mesh))
            }
        } else {
            None
        };
        out.push(SpacetimeStep {
            level,
            n_cells: mesh.n_cells(),
            n_dofs,
            report,
            indicators: ind,
            mesh: mesh.clone(),
        });
        on_step(out.last().unwrap());
        match next {
            Some(m) => mesh = m,
            None => break,
        }
    }
    Ok(out)
}

/// Space-time levels where each refinement halves the mesh size.
pub fn uniform_spacetime_levels(
    spec: &ProblemSpec,
    initial: Arc<SimplicialMesh>,
    params: &MajorantParams,
    n_ref: usize,
) -> Result<Vec<SpacetimeStep>, AdaptError> {
    uniform_spacetime_levels_observed(spec, initial, params, n_ref, |_| {})
}

/// [`uniform_spacetime_levels`] calling `on_step` after each level.
pub fn uniform_spacetime_levels_observed(
    spec: &ProblemSpec,
    initial: Arc<SimplicialMesh>,
    params: &MajorantParams,
    n_ref: usize,
    on_step: impl FnMut(&SpacetimeStep),
) -> Result<Vec<SpacetimeStep>, AdaptError> {
    let mut mesh = initial;
    spacetime_levels(
        spec,
        |level| {
            if level > 0 {
                mesh = Arc::new(refine_uniform(&mesh)?.mesh);
            }
            Ok(mesh.clone())
        },
        params,
        n_ref,
        on_step,
    )
}

/// Uniform levels on a box domain where level `l` is the structured
/// space-time mesh with `n_space 2^l` and `n_time 2^l` intervals, so every
/// level keeps the diagonal pattern of the first.
pub fn box_spacetime_levels_observed(
    spec: &ProblemSpec,
    n_space: usize,
    n_time: usize,
    params: &MajorantParams,
    n_ref: usize,
    on_step: impl FnMut(&SpacetimeStep),
) -> Result<Vec<SpacetimeStep>, AdaptError> {
    let ext = match &spec.domain {
        Domain::Box(e) => e.clone(),
        Domain::Polygon(_) => {
            return Err(ParabolicError::Invalid(
                "structured space-time levels need a box domain".into(),
            )
            .into())
        }
    };
    spacetime_levels(
        spec,
        |level| {
            Ok(Arc::new(spacetime_box_mesh(
                &ext,
                spec.t_final,
                n_space << level,
                n_time << level,
            )?))
        },
        params,
        n_ref,
        on_step,
    )
}

fn spacetime_levels(
    spec: &ProblemSpec,
    mut mesh_at: impl FnMut(usize) -> Result<Arc<SimplicialMesh>, AdaptError>,
    params: &MajorantParams,
    n_ref: usize,
    mut on_step: impl FnMut(&SpacetimeStep),
) -> Result<Vec<SpacetimeStep>, AdaptError> {
    let mut out = Vec::with_capacity(n_ref + 1);
    for level in 0..=n_ref {
        let mesh = mesh_at(level)?;
        let v = solve_spacetime(spec, mesh.clone())?;
        let (_, report) = optimize_flux_spacetime(spec, &v, params)?;
        out.push(SpacetimeStep {
            level,
            n_cells: mesh.n_cells(),
            n_dofs: v.space().n_dofs(),
            indicators: report.per_cell_md.clone(),
            report,
            mesh,
        });
        on_step(out.last().unwrap());
    }
    Ok(out)
}
