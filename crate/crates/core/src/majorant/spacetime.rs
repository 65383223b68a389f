//! Flux optimisation on a space-time mesh.
//!
//! The flux is a spatial vector field over the whole cylinder and only its
//! spatial divergence enters. For fixed `beta` the minimiser solves
//! `(K + C/beta S) Y = g - C/beta z` with `K` the `A^-1` weighted mass,
//! `S` the `div_x`-`div_x` matrix, `z_j = (r, div_x phi_j)` for
//! `r = f - sigma v_t - c v - b . grad v` and `g_j = (grad_x v, phi_j)`.

use super::slab::weighted_flux_mass;
use super::{
    cell_residuals, default_quad_degree, optimal_beta, sigma0_term, simplified_total,
    MajorantError, MajorantParams, MajorantReport,
};
use crate::fem::{
    assemble_div_div, assemble_div_source, assemble_vector_source, DiscreteField, FESpace,
    Quadrature,
};
use crate::linsolve::solve_spd_from;
use crate::parabolic::{error_parts, Approximation, ParabolicError, ProblemSpec};
use std::sync::Arc;

const FLUX_TOL: f64 = 1e-12;
const MONOTONE_SLACK: f64 = 1e-12;

pub fn optimize_flux_spacetime(
    spec: &ProblemSpec,
    v: &DiscreteField,
    params: &MajorantParams,
) -> Result<(DiscreteField, MajorantReport), MajorantError> {
    params.validate()?;
    let vs = v.space();
    if !vs.is_spacetime() || vs.components() != 1 || vs.spatial_dim() != spec.dim {
        return Err(
            ParabolicError::Invalid("expected a scalar field on a space-time mesh".into()).into(),
        );
    }
    let sd = spec.dim;
    let d = sd + 1;
    let flux = Arc::new(FESpace::spacetime_vector(
        vs.mesh().clone(),
        params.flux_degree,
    )?);
    let deg = default_quad_degree(params);
    let rule = Quadrature::simplex(d, deg);
    let k = weighted_flux_mass(&flux, &spec.a, deg, &[])?;
    let s = assemble_div_div(&flux)?;
    let (has_b, has_c) = (!spec.b.is_zero(), !spec.c.is_zero());
    let z = assemble_div_source(&flux, deg, 0.0, |cv, out| {
        let (mut val, mut g) = (Vec::new(), Vec::new());
        v.eval_bary(cv.cell, &rule.points, &mut val, &mut g);
        for q in 0..cv.n_q {
            let (x, t) = cv.xt(q);
            let mut r = spec.f.eval(x, t)? - spec.sigma * g[q * d + sd];
            if has_c {
                r -= spec.c.eval(x, t)? * val[q];
            }
            if has_b {
                let b = spec.b.eval(x, t)?;
                r -= (0..sd).map(|i| b[i] * g[q * d + i]).sum::<f64>();
            }
            out[q] = r;
        }
        Ok(())
    })?;
    let g = assemble_vector_source(&flux, deg, 0.0, |cv, out| {
        let (mut val, mut g) = (Vec::new(), Vec::new());
        v.eval_bary(cv.cell, &rule.points, &mut val, &mut g);
        for q in 0..cv.n_q {
            for i in 0..sd {
                out[q * sd + i] = g[q * d + i];
            }
        }
        Ok(())
    })?;
    let cf = spec.c_f * spec.c_f / spec.nu_lower;
    let sigma0 = sigma0_term(spec, &Approximation::SpaceTime { v, y: None })?;
    let mut beta = params.beta;
    let mut beta_solve = beta;
    let mut y = vec![0.0; flux.n_dofs()];
    let mut rounds = Vec::with_capacity(2 * params.l_iter_max);
    let mut last = None;
    for _ in 0..params.l_iter_max {
        let w = cf / beta;
        let lhs = k.lin_comb(1.0, &s, w);
        let rhs: Vec<f64> = g.iter().zip(&z).map(|(gi, zi)| gi - w * zi).collect();
        y = solve_spd_from(&lhs, &rhs, Some(&y), FLUX_TOL)?;
        let yf = DiscreteField::new(flux.clone(), y.clone());
        let r = cell_residuals(
            spec,
            &Approximation::SpaceTime { v, y: Some(&yf) },
            deg,
            None,
        )?;
        let m_d: f64 = r.md.iter().sum();
        let m_eq: f64 = r.meq.iter().sum();
        beta_solve = beta;
        rounds.push(simplified_total(
            m_d,
            m_eq,
            beta,
            params.nu,
            spec.c_f,
            spec.nu_lower,
            sigma0,
        ));
        beta = optimal_beta(m_d, m_eq, spec.c_f, spec.nu_lower, params.beta_clamp);
        rounds.push(simplified_total(
            m_d,
            m_eq,
            beta,
            params.nu,
            spec.c_f,
            spec.nu_lower,
            sigma0,
        ));
        last = Some((m_d, m_eq, r));
    }
    let (m_d, m_eq, r) = last.expect("at least one round");
    let mut report = MajorantReport {
        m_d,
        m_eq,
        sigma0_term: sigma0,
        total: *rounds.last().unwrap(),
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
        log::warn!("{}", report.warning.as_ref().unwrap());
    }
    if spec.exact.is_some() {
        let parts = error_parts(spec, &Approximation::SpaceTime { v, y: None })?;
        report.set_error(Some(parts.combined(spec.sigma, params.error_weights())));
    }
    Ok((DiscreteField::new(flux, y), report))
}
