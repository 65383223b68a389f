//! Functional error majorants: residuals, the majorant with all its free
//! parameters, flux optimisation on time slabs and on space-time meshes,
//! and efficiency indices.
//!
//! With `R_eq = f + div_x y - sigma v_t - c v - b . grad v` and
//! `R_d = y - A grad v` the majorant reads
//!
//! ```text
//! sigma ||e(0)||^2 + gamma ||mu R_eq / delta||^2 + alpha1 ||R_d||^2_{A^-1}
//!     + alpha2 C_F^2 / nu_A ||(1 - mu) R_eq||^2
//! ```
//!
//! and bounds `(2 - nu) ||grad e||^2_A + (2 - 1/gamma) ||delta e||^2 + sigma ||e(T)||^2`
//! whenever `1/alpha1 + 1/alpha2 = nu` and `e` vanishes on the lateral boundary.

mod slab;
mod spacetime;

pub use slab::{
    optimize_flux_slab, project_flux, run_timestepping_observed, run_timestepping_with_majorant,
    Scheme, SlabOptimizer, SlabRecord, TimesteppingRun,
};
pub use spacetime::optimize_flux_spacetime;

use crate::fem::{FemError, ScalarCoef};
use crate::linsolve::SolveError;
use crate::mesh::{inverse, INITIAL};
use crate::parabolic::{
    error_parts, integrate_cells, integrate_time_face, spatial_l2, Approximation, ErrorWeights,
    ParabolicError, ProblemSpec, ERROR_QUAD_DEGREE,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MajorantError {
    #[error(transparent)]
    Parabolic(#[from] ParabolicError),
    #[error("invalid majorant parameters: {0}")]
    Params(String),
    #[error("the approximation carries no flux")]
    MissingFlux,
    #[error("mu > 0 where delta^2 = {delta_sq} vanishes, at x = {x:?}, t = {t}")]
    DeltaVanishes { delta_sq: f64, x: Vec<f64>, t: f64 },
}

impl From<FemError> for MajorantError {
    fn from(e: FemError) -> Self {
        MajorantError::Parabolic(e.into())
    }
}

impl From<SolveError> for MajorantError {
    fn from(e: SolveError) -> Self {
        MajorantError::Parabolic(e.into())
    }
}

impl From<crate::expr::ExprError> for MajorantError {
    fn from(e: crate::expr::ExprError) -> Self {
        MajorantError::Parabolic(e.into())
    }
}

/// `delta^2` below this is treated as zero where `mu > 0`.
const DELTA_SQ_MIN: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct MajorantParams {
    /// In `(0, 2]`.
    pub nu: f64,
    /// At least 1/2.
    pub gamma: f64,
    /// Splits `R_eq` between the reaction term and the Friedrichs term; values in `[0, 1]`.
    pub mu: ScalarCoef,
    /// Initial `beta`; the optimisers update it.
    pub beta: f64,
    /// Explicit `(alpha1, alpha2)`; derived from `beta` when absent.
    pub alphas: Option<(f64, f64)>,
    pub l_iter_max: usize,
    pub beta_clamp: (f64, f64),
    /// Polynomial degree of the vector Lagrange flux.
    pub flux_degree: usize,
    /// Spatial quadrature degree; by default `2 p + 2` for the flux degree `p`.
    pub quad_degree: Option<usize>,
}

impl Default for MajorantParams {
    fn default() -> Self {
        MajorantParams {
            nu: 1.0,
            gamma: 1.0,
            mu: ScalarCoef::constant(0.0),
            beta: 1.0,
            alphas: None,
            l_iter_max: 3,
            beta_clamp: (1e-6, 1e6),
            flux_degree: 2,
            quad_degree: None,
        }
    }
}

impl MajorantParams {
    pub fn validate(&self) -> Result<(), MajorantError> {
        let bad = |m: String| Err(MajorantError::Params(m));
        if !(self.nu > 0.0 && self.nu <= 2.0) {
            return bad(format!("nu = {} must lie in (0, 2]", self.nu));
        }
        if !(self.gamma >= 0.5 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be at least 1/2", self.gamma));
        }
        let (lo, hi) = self.beta_clamp;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!(
                "beta clamp ({lo}, {hi}) is not a positive interval"
            ));
        }
        if !(self.beta >= lo && self.beta <= hi) {
            return bad(format!(
                "beta = {} outside its clamp [{lo}, {hi}]",
                self.beta
            ));
        }
        if self.l_iter_max == 0 {
            return bad("at least one optimisation round is needed".into());
        }
        if !(1..=2).contains(&self.flux_degree) {
            return bad(format!("flux degree {} is not 1 or 2", self.flux_degree));
        }
        if let Some((a1, a2)) = self.alphas {
            if !(a1 > 0.0 && a2 > 0.0) {
                return bad(format!("alphas ({a1}, {a2}) must be positive"));
            }
            if (1.0 / a1 + 1.0 / a2 - self.nu).abs() > 1e-12 * self.nu {
                return bad(format!(
                    "1/alpha1 + 1/alpha2 = {} differs from nu = {}",
                    1.0 / a1 + 1.0 / a2,
                    self.nu
                ));
            }
        }
        if let Some(c) = self.mu.as_constant() {
            if !(0.0..=1.0).contains(&c) {
                return bad(format!("mu = {c} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// `(alpha1, alpha2)`, from `beta` unless set explicitly.
    pub fn alphas(&self) -> (f64, f64) {
        self.alphas
            .unwrap_or_else(|| alphas_from_beta(self.beta, self.nu))
    }

    pub fn error_weights(&self) -> ErrorWeights {
        ErrorWeights {
            nu: self.nu,
            gamma: self.gamma,
        }
    }
}

/// `((1 + beta)/nu, (1 + 1/beta)/nu)`.
pub fn alphas_from_beta(beta: f64, nu: f64) -> (f64, f64) {
    ((1.0 + beta) / nu, (1.0 + 1.0 / beta) / nu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantReport {
    /// `||R_d||^2_{A^-1}`
    pub m_d: f64,
    /// `||R_eq||^2`
    pub m_eq: f64,
    /// `sigma ||v(0) - u_0||^2`
    pub sigma0_term: f64,
    pub total: f64,
    pub per_cell_md: Vec<f64>,
    pub per_cell_meq: Vec<f64>,
    /// `beta` entering `total`.
    pub beta_final: f64,
    /// `beta` used in the last flux solve.
    pub beta_solve: f64,
    /// Majorant after every flux solve and every `beta` update, in order.
    pub rounds: Vec<f64>,
    pub error_combined: Option<f64>,
    pub i_eff_sqrt: Option<f64>,
    pub i_eff_ratio: Option<f64>,
    pub warning: Option<String>,
}

impl MajorantReport {
    /// `true` when the recorded rounds never increase by more than `slack` relative.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.rounds
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * w[0].abs().max(f64::MIN_POSITIVE))
    }

    pub(crate) fn set_error(&mut self, error: Option<f64>) {
        self.error_combined = error;
        match error.and_then(|e| efficiency_index(self.total, e)) {
            Some((s, r)) => {
                self.i_eff_sqrt = Some(s);
                self.i_eff_ratio = Some(r);
            }
            None => {
                self.i_eff_sqrt = None;
                self.i_eff_ratio = None;
            }
        }
    }
}

/// `sqrt(M / [e])` and `M / [e]`; absent when the error is not positive.
pub fn efficiency_index(total_majorant: f64, error_combined: f64) -> Option<(f64, f64)> {
    if !(error_combined > 0.0) || !total_majorant.is_finite() || !error_combined.is_finite() {
        return None;
    }
    let r = total_majorant / error_combined;
    Some((r.sqrt(), r))
}

/// Minimiser `(C_F^2 m_eq / (nu_A m_d))^{1/2}` of the simplified majorant over `beta`, clamped.
pub fn optimal_beta(m_d: f64, m_eq: f64, c_f: f64, nu_lower: f64, clamp: (f64, f64)) -> f64 {
    let (lo, hi) = clamp;
    if !(m_eq > 0.0) {
        return lo;
    }
    if !(m_d > 0.0) {
        return hi;
    }
    (c_f * c_f * m_eq / (nu_lower * m_d)).sqrt().clamp(lo, hi)
}

/// `sigma0 + ((1 + beta) m_d + (1 + 1/beta) C_F^2 / nu_A m_eq) / nu`.
pub fn simplified_total(
    m_d: f64,
    m_eq: f64,
    beta: f64,
    nu: f64,
    c_f: f64,
    nu_lower: f64,
    sigma0: f64,
) -> f64 {
    let (a1, a2) = alphas_from_beta(beta, nu);
    sigma0 + a1 * m_d + a2 * (c_f * c_f / nu_lower) * m_eq
}

/// Per-cell `[m_d, m_eq, ||mu R_eq / delta||^2, ||(1 - mu) R_eq||^2]`.
pub(crate) struct CellResiduals {
    pub md: Vec<f64>,
    pub meq: Vec<f64>,
    pub mu_part: Vec<f64>,
    pub rest_part: Vec<f64>,
}

pub(crate) fn cell_residuals(
    spec: &ProblemSpec,
    approx: &Approximation,
    quad_degree: usize,
    mu: Option<&ScalarCoef>,
) -> Result<CellResiduals, MajorantError> {
    let has_flux = match approx {
        Approximation::Slab { y, .. } => y.is_some(),
        Approximation::SpaceTime { y, .. } => y.is_some(),
    };
    if !has_flux {
        return Err(MajorantError::MissingFlux);
    }
    let sd = approx.spatial_dim();
    let a_inv_const = match spec.a.as_constant() {
        Some(a) => Some(inverse(&a, sd).ok_or(FemError::Singular { cell: 0 })?),
        None => None,
    };
    let (has_b, has_c) = (!spec.b.is_zero(), !spec.c.is_zero());
    let mu = mu.filter(|m| !m.is_zero());
    let guard = std::sync::Mutex::new(None);
    let cells = integrate_cells(approx, quad_degree, 4, |p, out| {
        let x = &p.x[..sd];
        let a = spec.a.eval(x, p.t)?;
        let inv = match a_inv_const {
            Some(inv) => inv,
            None => inverse(&a, sd).ok_or(FemError::Singular { cell: 0 })?,
        };
        let mut rd = [0.0; 3];
        for r in 0..sd {
            rd[r] = p.y[r] - (0..sd).map(|k| a[r][k] * p.grad_v[k]).sum::<f64>();
        }
        let mut md = 0.0;
        for r in 0..sd {
            for k in 0..sd {
                md += rd[r] * inv[r][k] * rd[k];
            }
        }
        let mut req = spec.f.eval(x, p.t)? + p.div_y - spec.sigma * p.v_t;
        if has_c {
            req -= spec.c.eval(x, p.t)? * p.v;
        }
        if has_b {
            let b = spec.b.eval(x, p.t)?;
            req -= (0..sd).map(|k| b[k] * p.grad_v[k]).sum::<f64>();
        }
        out[0] += p.w * md;
        out[1] += p.w * req * req;
        match mu {
            Some(mu) => {
                let m = mu.eval(x, p.t)?;
                if m > 0.0 {
                    let d2 = spec.delta_sq(x, p.t)?;
                    if !(d2 > DELTA_SQ_MIN) {
                        let mut g = guard.lock().unwrap();
                        if g.is_none() {
                            *g = Some((d2, x.to_vec(), p.t));
                        }
                        return Ok(());
                    }
                    out[2] += p.w * (m * req) * (m * req) / d2;
                }
                out[3] += p.w * ((1.0 - m) * req) * ((1.0 - m) * req);
            }
            None => out[3] += p.w * req * req,
        }
        Ok(())
    })?;
    if let Some((delta_sq, x, t)) = guard.into_inner().unwrap() {
        return Err(MajorantError::DeltaVanishes { delta_sq, x, t });
    }
    let col = |j: usize| {
        cells
            .iter()
            .skip(j)
            .step_by(4)
            .copied()
            .collect::<Vec<f64>>()
    };
    Ok(CellResiduals {
        md: col(0),
        meq: col(1),
        mu_part: col(2),
        rest_part: col(3),
    })
}

/// Per-cell `||R_eq||^2` of an approximation with flux.
pub fn residual_eq(
    spec: &ProblemSpec,
    approx: &Approximation,
    quad_degree: usize,
) -> Result<Vec<f64>, MajorantError> {
    Ok(cell_residuals(spec, approx, quad_degree, None)?.meq)
}

/// Per-cell `||y - A grad v||^2_{A^-1}` of an approximation with flux.
pub fn residual_d(
    spec: &ProblemSpec,
    approx: &Approximation,
    quad_degree: usize,
) -> Result<Vec<f64>, MajorantError> {
    Ok(cell_residuals(spec, approx, quad_degree, None)?.md)
}

/// `sigma ||v(0) - u_0||^2` with the initial trace of the first approximation.
pub fn sigma0_term(spec: &ProblemSpec, first: &Approximation) -> Result<f64, MajorantError> {
    let sd = first.spatial_dim();
    let e2 = match *first {
        Approximation::Slab { v_k, t_k, .. } => {
            spatial_l2(&|x, _| Ok(spec.u_0.eval(x, 0.0)?), v_k, t_k)?
        }
        Approximation::SpaceTime { v, .. } => {
            integrate_time_face(v, INITIAL, ERROR_QUAD_DEGREE, |x, _, val| {
                let e = spec.u_0.eval(&x[..sd], 0.0)? - val;
                Ok(e * e)
            })?
        }
    };
    Ok(spec.sigma * e2)
}

/// Quadrature degree for majorant integrals over an approximation.
pub(crate) fn default_quad_degree(params: &MajorantParams) -> usize {
    params.quad_degree.unwrap_or(2 * params.flux_degree + 2)
}

/// The majorant with free `nu`, `gamma`, `mu` and `alpha`s over consecutive
/// slabs (or one space-time approximation), all carrying fluxes. When the
/// problem has an exact solution the report's error is the weighted left-hand
/// side `(2 - nu) ||grad e||^2_A + (2 - 1/gamma) ||delta e||^2 + sigma ||e(T)||^2`.
pub fn majorant_general(
    spec: &ProblemSpec,
    approximations: &[Approximation],
    params: &MajorantParams,
) -> Result<MajorantReport, MajorantError> {
    params.validate()?;
    let first = approximations
        .first()
        .ok_or_else(|| MajorantError::Params("no approximation given".into()))?;
    let deg = default_quad_degree(params);
    let (a1, a2) = params.alphas();
    let cf = spec.c_f * spec.c_f / spec.nu_lower;
    let sigma0 = sigma0_term(spec, first)?;
    let (mut m_d, mut m_eq, mut mu_part, mut rest) = (0.0, 0.0, 0.0, 0.0);
    let (mut per_cell_md, mut per_cell_meq) = (Vec::new(), Vec::new());
    for a in approximations {
        let r = cell_residuals(spec, a, deg, Some(&params.mu))?;
        m_d += r.md.iter().sum::<f64>();
        m_eq += r.meq.iter().sum::<f64>();
        mu_part += r.mu_part.iter().sum::<f64>();
        rest += r.rest_part.iter().sum::<f64>();
        per_cell_md = r.md;
        per_cell_meq = r.meq;
    }
    let total = sigma0 + params.gamma * mu_part + a1 * m_d + a2 * cf * rest;
    let mut report = MajorantReport {
        m_d,
        m_eq,
        sigma0_term: sigma0,
        total,
        per_cell_md,
        per_cell_meq,
        beta_final: params.beta,
        beta_solve: params.beta,
        rounds: vec![total],
        error_combined: None,
        i_eff_sqrt: None,
        i_eff_ratio: None,
        warning: None,
    };
    if spec.exact.is_some() {
        let w = params.error_weights();
        let (mut vol, mut e_t) = (0.0, 0.0);
        for a in approximations {
            let p = error_parts(spec, a)?;
            vol += p.volume(w);
            e_t = p.e_t;
        }
        report.set_error(Some(vol + spec.sigma * e_t));
    }
    Ok(report)
}
