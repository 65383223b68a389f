//! Flux optimisation slab by slab for time-stepping approximations.
//!
//! On a slab `(t_k, t_k + tau)` both `v` and the flux are linear in time,
//! `y = (1 - s) y_k + s y_k1` with `s = (t - t_k)/tau`, and `y_k` is fixed
//! from the previous slab. The simplified majorant is quadratic in `y_k1`;
//! its minimiser solves
//!
//! ```text
//! (K2 + C/beta S) Y1 = -(K1 + C/beta S/2) Y0 - C/beta (3/tau^2) z + g
//! ```
//!
//! with `C = C_F^2/nu_A`, `S` the div-div matrix,
//! `K2 = 3/tau int s^2 K(t) dt`, `K1 = 3/tau int s(1-s) K(t) dt` for the
//! `A^-1` weighted mass `K(t)`, `z_j = (int r (t - t_k) dt, div phi_j)` with
//! `r = f - sigma v_t - c v - b . grad v`, and `g_j = (grad v_k1 + grad v_k / 2, phi_j)`.
//! For `A` constant in time `K2 = K` and `K1 = K/2`.

use super::{
    cell_residuals, default_quad_degree, optimal_beta, sigma0_term, simplified_total,
    MajorantError, MajorantParams, MajorantReport,
};
use crate::fem::{
    assemble_div_div, assemble_div_source, assemble_matrix_with, assemble_vector_mass,
    assemble_vector_source, gauss_interval, DiscreteField, FESpace, FemError, MatrixCoef,
    Quadrature, TIME_GAUSS_POINTS,
};
use crate::linsolve::{solve_spd, solve_spd_from, SparseMatrix};
use crate::mesh::inverse;
use crate::parabolic::{
    error_parts, interpolate, ExplicitStepper, ImplicitStepper, ParabolicError, ProblemSpec,
    SlabSolution, StepStatus, TimeGrid,
};
use std::sync::Arc;

/// Relative residual for flux solves.
const FLUX_TOL: f64 = 1e-12;
/// Relative slack before a majorant increase between rounds is reported.
const MONOTONE_SLACK: f64 = 1e-12;

/// `sum_g w_g (A(t_g)^-1 phi_j, phi_i)` over time points `(t_g, w_g)`; on a
/// space-time space the time of the quadrature point is used with weight 1.
pub(crate) fn weighted_flux_mass(
    flux: &FESpace,
    a: &MatrixCoef,
    quad_degree: usize,
    times: &[(f64, f64)],
) -> Result<SparseMatrix, FemError> {
    let nl = flux.n_local();
    let m = flux.components();
    let n = nl * m;
    let constant_inv = match a.as_constant() {
        Some(mat) => Some(inverse(&mat, m).ok_or(FemError::Singular { cell: 0 })?),
        None => None,
    };
    let st = flux.is_spacetime();
    let single = [(0.0, 1.0)];
    let times = if st { &single[..] } else { times };
    assemble_matrix_with(flux, quad_degree, 0.0, |cv, loc| {
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let mut inv = [[0.0; 3]; 3];
            for &(t, wt) in times {
                let tt = if st { tq } else { t };
                let ai = match constant_inv {
                    Some(ai) => ai,
                    None => {
                        inverse(&a.eval(x, tt)?, m).ok_or(FemError::Singular { cell: cv.cell })?
                    }
                };
                for r in 0..m {
                    for k in 0..m {
                        inv[r][k] += wt * 0.5 * (ai[r][k] + ai[k][r]);
                    }
                }
            }
            let w = cv.jxw(q);
            for ia in 0..n {
                let (ca, i) = (ia / nl, ia % nl);
                let pi = cv.phi(q, i);
                for jb in 0..n {
                    let (cb, j) = (jb / nl, jb % nl);
                    loc[ia * n + jb] += w * inv[ca][cb] * pi * cv.phi(q, j);
                }
            }
        }
        Ok(())
    })
}

/// L2 projection of `A(t) grad v` onto the flux space.
pub fn project_flux(
    spec: &ProblemSpec,
    v: &DiscreteField,
    flux: &Arc<FESpace>,
    t: f64,
) -> Result<DiscreteField, MajorantError> {
    let sd = flux.spatial_dim();
    let d = flux.mesh().dim();
    let deg = flux.quad_degree();
    let mass = assemble_vector_mass(flux, &MatrixCoef::identity(sd), 0.0)?;
    let rule = Quadrature::simplex(d, deg);
    let rhs = assemble_vector_source(flux, deg, t, |cv, out| {
        let (mut val, mut g) = (Vec::new(), Vec::new());
        v.eval_bary(cv.cell, &rule.points, &mut val, &mut g);
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let a = spec.a.eval(x, tq)?;
            for r in 0..sd {
                out[q * sd + r] = (0..sd).map(|k| a[r][k] * g[q * d + k]).sum();
            }
        }
        Ok(())
    })?;
    let y = solve_spd(&mass, &rhs, FLUX_TOL)?;
    Ok(DiscreteField::new(flux.clone(), y))
}

/// Flux space and matrices reused across slabs on one spatial mesh.
pub struct SlabOptimizer<'a> {
    spec: &'a ProblemSpec,
    params: MajorantParams,
    flux: Arc<FESpace>,
    quad_degree: usize,
    div_div: SparseMatrix,
    /// `K` when `A` does not depend on time.
    k_const: Option<SparseMatrix>,
}

impl<'a> SlabOptimizer<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        params: &MajorantParams,
        mesh: Arc<crate::mesh::SimplicialMesh>,
    ) -> Result<SlabOptimizer<'a>, MajorantError> {
        params.validate()?;
        let flux = Arc::new(FESpace::vector(mesh, params.flux_degree)?);
        let quad_degree = default_quad_degree(params);
        let div_div = assemble_div_div(&flux)?;
        let a_depends_on_t =
            (0..spec.dim).any(|i| (0..spec.dim).any(|j| spec.a.entry(i, j).expr().depends_on_t()));
        let k_const = if a_depends_on_t {
            None
        } else {
            Some(weighted_flux_mass(
                &flux,
                &spec.a,
                quad_degree,
                &[(0.0, 1.0)],
            )?)
        };
        Ok(SlabOptimizer {
            spec,
            params: params.clone(),
            flux,
            quad_degree,
            div_div,
            k_const,
        })
    }

    pub fn flux_space(&self) -> &Arc<FESpace> {
        &self.flux
    }

    pub fn params(&self) -> &MajorantParams {
        &self.params
    }

    /// Starts the next slab from the `beta` reached on this one.
    pub fn carry_beta(&mut self, beta: f64) {
        self.params.beta = beta.clamp(self.params.beta_clamp.0, self.params.beta_clamp.1);
    }

    fn time_matrices(
        &self,
        t_k: f64,
        tau: f64,
    ) -> Result<(SparseMatrix, SparseMatrix), MajorantError> {
        if let Some(k) = &self.k_const {
            return Ok((k.clone(), k.scaled(0.5)));
        }
        let pts = gauss_interval(TIME_GAUSS_POINTS, t_k, t_k + tau);
        let w2: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(t, w)| {
                let s = (t - t_k) / tau;
                (t, 3.0 / tau * w * s * s)
            })
            .collect();
        let w1: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(t, w)| {
                let s = (t - t_k) / tau;
                (t, 3.0 / tau * w * s * (1.0 - s))
            })
            .collect();
        Ok((
            weighted_flux_mass(&self.flux, &self.spec.a, self.quad_degree, &w2)?,
            weighted_flux_mass(&self.flux, &self.spec.a, self.quad_degree, &w1)?,
        ))
    }

    fn z_vector(&self, slab: &SlabSolution) -> Result<Vec<f64>, MajorantError> {
        let spec = self.spec;
        let d = self.flux.mesh().dim();
        let rule = Quadrature::simplex(d, self.quad_degree);
        let (t_k, tau) = (slab.t_k, slab.tau);
        let times = gauss_interval(TIME_GAUSS_POINTS, t_k, t_k + tau);
        let (has_b, has_c) = (!spec.b.is_zero(), !spec.c.is_zero());
        Ok(assemble_div_source(
            &self.flux,
            self.quad_degree,
            t_k,
            |cv, out| {
                let (mut a, mut b, mut ga, mut gb) =
                    (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                slab.v_k.eval_bary(cv.cell, &rule.points, &mut a, &mut ga);
                slab.v_k1.eval_bary(cv.cell, &rule.points, &mut b, &mut gb);
                for q in 0..cv.n_q {
                    let (x, _) = cv.xt(q);
                    let v_t = (b[q] - a[q]) / tau;
                    let mut acc = 0.0;
                    for &(t, w) in &times {
                        let s = (t - t_k) / tau;
                        let mut r = spec.f.eval(x, t)? - spec.sigma * v_t;
                        if has_c {
                            r -= spec.c.eval(x, t)? * ((1.0 - s) * a[q] + s * b[q]);
                        }
                        if has_b {
                            let bv = spec.b.eval(x, t)?;
                            r -= (0..d)
                                .map(|k| bv[k] * ((1.0 - s) * ga[q * d + k] + s * gb[q * d + k]))
                                .sum::<f64>();
                        }
                        acc += w * (t - t_k) * r;
                    }
                    out[q] = acc;
                }
                Ok(())
            },
        )?)
    }

    fn g_vector(&self, slab: &SlabSolution) -> Result<Vec<f64>, MajorantError> {
        let d = self.flux.mesh().dim();
        let rule = Quadrature::simplex(d, self.quad_degree);
        Ok(assemble_vector_source(
            &self.flux,
            self.quad_degree,
            0.0,
            |cv, out| {
                let (mut val, mut ga, mut gb) = (Vec::new(), Vec::new(), Vec::new());
                slab.v_k.eval_bary(cv.cell, &rule.points, &mut val, &mut ga);
                slab.v_k1
                    .eval_bary(cv.cell, &rule.points, &mut val, &mut gb);
                for q in 0..cv.n_q {
                    for k in 0..d {
                        out[q * d + k] = gb[q * d + k] + 0.5 * ga[q * d + k];
                    }
                }
                Ok(())
            },
        )?)
    }

    /// Runs the flux/beta alternation on one slab with `y_k` fixed. The
    /// initial value term enters only on the first slab (`slab.k == 0`).
    pub fn optimize(
        &self,
        slab: &SlabSolution,
        y_k: &DiscreteField,
    ) -> Result<(DiscreteField, MajorantReport), MajorantError> {
        let spec = self.spec;
        let p = &self.params;
        if !Arc::ptr_eq(y_k.space(), &self.flux) && y_k.space().n_dofs() != self.flux.n_dofs() {
            return Err(FemError::MeshMismatch.into());
        }
        if !(slab.tau > 0.0) {
            return Err(ParabolicError::Invalid(format!(
                "slab length {} must be positive",
                slab.tau
            ))
            .into());
        }
        let y_k = DiscreteField::new(self.flux.clone(), y_k.dofs().to_vec());
        let cf = spec.c_f * spec.c_f / spec.nu_lower;
        let (k2, k1) = self.time_matrices(slab.t_k, slab.tau)?;
        let z = self.z_vector(slab)?;
        let g = self.g_vector(slab)?;
        let sigma0 = if slab.k == 0 {
            sigma0_term(spec, &slab.approximation(None))?
        } else {
            0.0
        };
        let mut beta = p.beta;
        let mut y1 = y_k.dofs().to_vec();
        let mut rounds = Vec::with_capacity(2 * p.l_iter_max);
        let mut last = None;
        let mut beta_solve = beta;
        for _ in 0..p.l_iter_max {
            let w = cf / beta;
            let lhs = k2.lin_comb(1.0, &self.div_div, w);
            let coupling = k1.lin_comb(1.0, &self.div_div, 0.5 * w);
            let cy = coupling.mul_vec(y_k.dofs());
            let rhs: Vec<f64> = (0..g.len())
                .map(|i| g[i] - cy[i] - w * 3.0 / (slab.tau * slab.tau) * z[i])
                .collect();
            y1 = solve_spd_from(&lhs, &rhs, Some(&y1), FLUX_TOL)?;
            let y1f = DiscreteField::new(self.flux.clone(), y1.clone());
            let r = cell_residuals(
                spec,
                &slab.approximation(Some((&y_k, &y1f))),
                self.quad_degree,
                None,
            )?;
            let m_d: f64 = r.md.iter().sum();
            let m_eq: f64 = r.meq.iter().sum();
            beta_solve = beta;
            rounds.push(simplified_total(
                m_d,
                m_eq,
                beta,
                p.nu,
                spec.c_f,
                spec.nu_lower,
                sigma0,
            ));
            beta = optimal_beta(m_d, m_eq, spec.c_f, spec.nu_lower, p.beta_clamp);
            rounds.push(simplified_total(
                m_d,
                m_eq,
                beta,
                p.nu,
                spec.c_f,
                spec.nu_lower,
                sigma0,
            ));
            last = Some((m_d, m_eq, r));
        }
        let (m_d, m_eq, r) = last.expect("at least one round");
        let total = *rounds.last().unwrap();
        let mut report = MajorantReport {
            m_d,
            m_eq,
            sigma0_term: sigma0,
            total,
            per_cell_md: r.md,
            per_cell_meq: r.meq,
            beta_final: beta,
            beta_solve,
            rounds,
            error_combined: None,
            i_eff_sqrt: None,
            i_eff_ratio: None,
            warning: None,
        };
        if !report.is_monotone(MONOTONE_SLACK) {
            report.warning = Some(format!(
                "majorant increased between rounds: {:?}",
                report.rounds
            ));
            log::warn!("slab {}: {}", slab.k, report.warning.as_ref().unwrap());
        }
        let y1 = DiscreteField::new(self.flux.clone(), y1);
        if spec.exact.is_some() {
            let parts = error_parts(spec, &slab.approximation(None))?;
            report.set_error(Some(parts.volume(p.error_weights())));
        }
        Ok((y1, report))
    }
}

/// One slab of flux optimisation; see [`SlabOptimizer::optimize`].
pub fn optimize_flux_slab(
    spec: &ProblemSpec,
    slab: &SlabSolution,
    y_k: &DiscreteField,
    params: &MajorantParams,
) -> Result<(DiscreteField, MajorantReport), MajorantError> {
    SlabOptimizer::new(spec, params, slab.v_k.space().mesh().clone())?.optimize(slab, y_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Implicit,
    Explicit,
}

#[derive(Debug, Clone)]
pub struct SlabRecord {
    pub k: usize,
    /// End of the slab.
    pub t: f64,
    pub report: MajorantReport,
    /// Sum of slab majorants so far.
    pub accumulated_majorant: f64,
    /// Sum of slab error increments plus `sigma ||e(t)||^2`.
    pub accumulated_error: Option<f64>,
    /// `sigma ||e(t)||^2` alone.
    pub final_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TimesteppingRun {
    pub slabs: Vec<SlabRecord>,
    pub v_final: DiscreteField,
    pub y_final: DiscreteField,
    /// First slab whose step produced non-finite values.
    pub blow_up: Option<usize>,
}

impl TimesteppingRun {
    pub fn accumulated_majorant(&self) -> f64 {
        self.slabs.last().map_or(0.0, |s| s.accumulated_majorant)
    }

    pub fn accumulated_error(&self) -> Option<f64> {
        self.slabs.last().and_then(|s| s.accumulated_error)
    }
}

/// Time stepping on a fixed spatial mesh with a flux optimised on every slab.
/// The initial flux is the L2 projection of `A grad v_0`; each slab's final
/// flux starts the next slab. A step with non-finite values ends the run with
/// `blow_up` set.
pub fn run_timestepping_with_majorant(
    spec: &ProblemSpec,
    space: &Arc<FESpace>,
    grid: &TimeGrid,
    params: &MajorantParams,
    scheme: Scheme,
) -> Result<TimesteppingRun, MajorantError> {
    run_timestepping_observed(spec, space, grid, params, scheme, |_| {})
}

/// [`run_timestepping_with_majorant`] calling `on_slab` after each slab.
pub fn run_timestepping_observed(
    spec: &ProblemSpec,
    space: &Arc<FESpace>,
    grid: &TimeGrid,
    params: &MajorantParams,
    scheme: Scheme,
    mut on_slab: impl FnMut(&SlabRecord),
) -> Result<TimesteppingRun, MajorantError> {
    let mut opt = SlabOptimizer::new(spec, params, space.mesh().clone())?;
    let mut implicit = ImplicitStepper::new(spec, space.clone())?;
    let mut explicit = ExplicitStepper::new(spec, space.clone())?;
    let mut v = interpolate(&spec.u_0, space, 0.0)?;
    let mut y = project_flux(spec, &v, opt.flux_space(), 0.0)?;
    let mut slabs = Vec::with_capacity(grid.n_slabs());
    let (mut acc_m, mut acc_e) = (0.0, Some(0.0));
    let mut blow_up = None;
    for k in 0..grid.n_slabs() {
        let (t_k, tau) = (grid.t(k), grid.tau(k));
        let v1 = match scheme {
            Scheme::Implicit => implicit.step(&v, t_k, tau)?,
            Scheme::Explicit => {
                let (v1, status) = explicit.step(&v, t_k, tau)?;
                if status == StepStatus::BlowUp {
                    blow_up = Some(k);
                    break;
                }
                v1
            }
        };
        let slab = SlabSolution {
            v_k: v,
            v_k1: v1,
            t_k,
            tau,
            k,
        };
        let (y1, report) = match opt.optimize(&slab, &y) {
            Ok(r) => r,
            Err(MajorantError::Parabolic(ParabolicError::Solve(e)))
                if scheme == Scheme::Explicit =>
            {
                log::warn!("slab {k}: flux solve failed on a diverging approximation: {e}");
                blow_up = Some(k);
                v = slab.v_k1;
                break;
            }
            Err(e) => return Err(e),
        };
        opt.carry_beta(report.beta_final);
        acc_m += report.total;
        let final_error = match spec.exact {
            Some(_) => {
                Some(spec.sigma * crate::parabolic::l2_error_at(spec, &slab.v_k1, t_k + tau)?)
            }
            None => None,
        };
        acc_e = match (acc_e, report.error_combined) {
            (Some(a), Some(e)) => Some(a + e),
            _ => None,
        };
        let finite = report.total.is_finite();
        slabs.push(SlabRecord {
            k,
            t: t_k + tau,
            accumulated_majorant: acc_m,
            accumulated_error: acc_e.zip(final_error).map(|(a, f)| a + f),
            final_error,
            report,
        });
        on_slab(slabs.last().unwrap());
        v = slab.v_k1;
        y = y1;
        if !finite {
            blow_up = Some(k);
            break;
        }
    }
    Ok(TimesteppingRun {
        slabs,
        v_final: v,
        y_final: y,
        blow_up,
    })
}
