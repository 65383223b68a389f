#![allow(dead_code)]

pub mod manufactured;
pub mod oracle;

use majorant_core::fem::{DiscreteField, FESpace};
use majorant_core::majorant::{
    project_flux, MajorantError, MajorantParams, MajorantReport, SlabOptimizer,
};
use majorant_core::mesh::{refine, MarkRule, MarkedSet, SimplicialMesh};
use majorant_core::parabolic::{
    interpolate, Approximation, ImplicitStepper, ProblemSpec, SlabSolution, TimeGrid,
};
use rand::seq::index::sample;
use rand::Rng;
use std::sync::Arc;

/// One implicit slab with the flux at both ends and its report.
pub struct Slab {
    pub sol: SlabSolution,
    pub y_k: DiscreteField,
    pub y_k1: DiscreteField,
    pub report: MajorantReport,
}

impl Slab {
    pub fn approximation(&self) -> Approximation<'_> {
        self.sol.approximation(Some((&self.y_k, &self.y_k1)))
    }
}

/// Implicit time stepping with slab-wise flux optimisation, keeping every
/// slab's fields.
pub fn implicit_slabs(
    spec: &ProblemSpec,
    space: &Arc<FESpace>,
    grid: &TimeGrid,
    params: &MajorantParams,
) -> Result<Vec<Slab>, MajorantError> {
    let mut opt = SlabOptimizer::new(spec, params, space.mesh().clone())?;
    let mut stepper = ImplicitStepper::new(spec, space.clone())?;
    let mut v = interpolate(&spec.u_0, space, 0.0)?;
    let mut y = project_flux(spec, &v, opt.flux_space(), 0.0)?;
    let mut out = Vec::new();
    for k in 0..grid.n_slabs() {
        let (t_k, tau) = (grid.t(k), grid.tau(k));
        let v1 = stepper.step(&v, t_k, tau)?;
        let sol = SlabSolution {
            v_k: v,
            v_k1: v1,
            t_k,
            tau,
            k,
        };
        let (y1, report) = opt.optimize(&sol, &y)?;
        opt.carry_beta(report.beta_final);
        v = sol.v_k1.clone();
        out.push(Slab {
            sol,
            y_k: y,
            y_k1: y1.clone(),
            report,
        });
        y = y1;
    }
    Ok(out)
}

/// Refines random subsets of cells until the next pass would exceed `max_cells`.
pub fn random_local_refinement(
    mesh: SimplicialMesh,
    rng: &mut impl Rng,
    passes: usize,
    max_cells: usize,
) -> SimplicialMesh {
    let mut mesh = mesh;
    for _ in 0..passes {
        let n = mesh.n_cells();
        // closure at most roughly doubles the marked count per pass
        let k = ((n as f64 * rng.gen_range(0.05..0.3)) as usize).max(1);
        if n + 4 * k * mesh.dim() > max_cells {
            break;
        }
        let mut cells = sample(rng, n, k).into_vec();
        cells.sort_unstable();
        let marked = MarkedSet {
            cells,
            rule: MarkRule::Explicit,
        };
        let next = refine(&mesh, &marked).expect("refinement").mesh;
        if next.n_cells() > max_cells {
            break;
        }
        mesh = next;
    }
    mesh
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
