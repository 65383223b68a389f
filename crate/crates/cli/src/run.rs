//! Executes a [`RunConfig`] and writes `report.csv` and `summary.txt`.

use crate::config::{
    ConfigError, CriterionChoice, DomainSpec, MarkingChoice, Mode, RunConfig, SchemeChoice, Study,
};
use majorant_core::adapt::{
    adapt_slab_loop_observed, adapt_spacetime_loop_observed, box_spacetime_levels_observed,
    AdaptError, Criterion, Marking, SlabStep, SpacetimeStep,
};
use majorant_core::fem::{FESpace, MatrixCoef, ScalarCoef, VectorCoef};
use majorant_core::majorant::{
    efficiency_index, run_timestepping_observed, run_timestepping_with_majorant, MajorantError,
    MajorantParams, Scheme, TimesteppingRun,
};
use majorant_core::mesh::{refine_uniform, SimplicialMesh};
use majorant_core::parabolic::{
    sample_ellipticity, spacetime_box_mesh, stable_explicit_step, Domain, ProblemSpec, TimeGrid,
};
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

pub const CSV_HEADER: &str =
    "ref_or_slab,n_cells,n_dofs,e_total,m_d,m_eq,majorant_total,i_eff_sqrt,i_eff_ratio,wall_ms";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {msg}")]
    Io { path: String, msg: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Io { .. } => 3,
        }
    }
}

impl From<AdaptError> for RunError {
    fn from(e: AdaptError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<MajorantError> for RunError {
    fn from(e: MajorantError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
    /// Zero the wall-clock column so repeated runs give identical files.
    pub deterministic: bool,
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub e_total: Option<f64>,
    pub m_d: f64,
    pub m_eq: f64,
    pub majorant_total: f64,
    pub i_eff_sqrt: Option<f64>,
    pub i_eff_ratio: Option<f64>,
    pub wall_ms: f64,
}

impl Row {
    pub fn to_csv(&self) -> String {
        let o = |v: Option<f64>| v.map_or("nan".to_string(), fmt_e);
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.n_cells,
            self.n_dofs,
            o(self.e_total),
            fmt_e(self.m_d),
            fmt_e(self.m_eq),
            fmt_e(self.majorant_total),
            o(self.i_eff_sqrt),
            o(self.i_eff_ratio),
            fmt_e(self.wall_ms)
        )
    }
}

/// C-style `%.6e`: two-digit signed exponent, `nan` and `inf` spelled out.
pub fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rows: Vec<Row>,
    /// Slab whose step diverged, for explicit runs.
    pub blow_up: Option<usize>,
    pub warnings: Vec<String>,
    pub dir: PathBuf,
}

/// Problem data and initial mesh for a configuration.
pub fn build_problem(cfg: &RunConfig) -> Result<(ProblemSpec, SimplicialMesh), ConfigError> {
    let p = &cfg.problem;
    let d = &cfg.discretisation;
    let dim = p.domain.dim();
    let expr = |key: &str, src: &str| {
        ScalarCoef::parse(src).map_err(|e| ConfigError::Value {
            key: format!("problem.{key}"),
            msg: format!("'{src}': {e}"),
        })
    };
    let domain = match &p.domain {
        DomainSpec::Box(e) => Domain::Box(e.clone()),
        DomainSpec::Polygon(v) => Domain::Polygon(v.clone()),
    };
    let mut spec = ProblemSpec::new(domain);
    spec.sigma = p.sigma;
    spec.t_final = p.t_final;
    spec.a = parse_matrix(&p.a, dim)?;
    spec.b = parse_vector(&p.b, dim)?;
    spec.c = expr("c", &p.c)?;
    spec.f = expr("f", &p.f)?;
    spec.u_d = expr("u_d", &p.u_d)?;
    spec.u_0 = expr("u_0", &p.u_0)?;
    spec.exact = p
        .exact_u
        .as_deref()
        .map(|s| expr("exact_u", s))
        .transpose()?;
    if let Some(cf) = p.c_f {
        spec.c_f = cf;
    }
    let mesh_err = |e: majorant_core::mesh::MeshError| ConfigError::Value {
        key: "problem.domain".into(),
        msg: e.to_string(),
    };
    let spatial = spec.domain.mesh(d.mesh_n).map_err(mesh_err)?;
    let (lo, hi) =
        sample_ellipticity(&spec.a, &spatial, spec.t_final).map_err(|e| ConfigError::Value {
            key: "problem.a".into(),
            msg: e.to_string(),
        })?;
    spec.nu_lower = p.nu_lower.unwrap_or(lo);
    spec.nu_upper = p.nu_upper.unwrap_or(hi);
    spec.validate(&spatial)
        .map_err(|e| ConfigError::Other(e.to_string()))?;
    let mesh = match d.mode {
        Mode::Timestep => spatial,
        Mode::Spacetime => {
            let ext = spec.domain.bounding_box();
            spacetime_box_mesh(&ext, spec.t_final, d.mesh_n, d.time_n.unwrap_or(d.mesh_n))
                .map_err(mesh_err)?
        }
    };
    Ok((spec, mesh))
}

fn parse_matrix(src: &str, dim: usize) -> Result<MatrixCoef, ConfigError> {
    let err = |msg: String| ConfigError::Value {
        key: "problem.a".into(),
        msg,
    };
    let rows: Vec<&str> = src.split(';').collect();
    let parse =
        |s: &str| ScalarCoef::parse(s.trim()).map_err(|e| err(format!("'{}': {e}", s.trim())));
    if rows.len() == 1 && !src.contains(',') {
        let s = parse(src)?;
        let entries = (0..dim * dim)
            .map(|k| {
                if k / dim == k % dim {
                    s.clone()
                } else {
                    ScalarCoef::constant(0.0)
                }
            })
            .collect();
        return Ok(MatrixCoef::new(dim, entries));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    if rows.len() != dim {
        return Err(err(format!("expected {dim} rows, got {}", rows.len())));
    }
    for r in rows {
        let cols: Vec<&str> = r.split(',').collect();
        if cols.len() != dim {
            return Err(err(format!("expected {dim} entries in row '{r}'")));
        }
        for c in cols {
            entries.push(parse(c)?);
        }
    }
    Ok(MatrixCoef::new(dim, entries))
}

fn parse_vector(src: &str, dim: usize) -> Result<VectorCoef, ConfigError> {
    let err = |msg: String| ConfigError::Value {
        key: "problem.b".into(),
        msg,
    };
    let parts: Vec<&str> = src.split(',').collect();
    let parse =
        |s: &str| ScalarCoef::parse(s.trim()).map_err(|e| err(format!("'{}': {e}", s.trim())));
    if parts.len() == 1 {
        let s = parse(parts[0])?;
        if s.is_zero() {
            return Ok(VectorCoef::zero(dim));
        }
        if dim != 1 {
            return Err(err(format!("expected {dim} components")));
        }
        return Ok(VectorCoef::new(vec![s]));
    }
    if parts.len() != dim {
        return Err(err(format!(
            "expected {dim} components, got {}",
            parts.len()
        )));
    }
    Ok(VectorCoef::new(
        parts.into_iter().map(parse).collect::<Result<_, _>>()?,
    ))
}

pub fn majorant_params(cfg: &RunConfig) -> Result<MajorantParams, ConfigError> {
    let m = &cfg.majorant;
    let mu = ScalarCoef::parse(&m.mu).map_err(|e| ConfigError::Value {
        key: "majorant.mu".into(),
        msg: e.to_string(),
    })?;
    let params = MajorantParams {
        nu: m.nu,
        gamma: m.gamma,
        mu,
        beta: m.beta,
        l_iter_max: m.l_iter_max,
        flux_degree: cfg.discretisation.flux_degree,
        ..MajorantParams::default()
    };
    params
        .validate()
        .map_err(|e| ConfigError::Other(e.to_string()))?;
    Ok(params)
}

fn marking(cfg: &RunConfig) -> Marking {
    match cfg.adaptivity.marking {
        MarkingChoice::Bulk => Marking::Bulk(cfg.adaptivity.theta),
        MarkingChoice::Average => Marking::Average,
        MarkingChoice::All => Marking::All,
    }
}

fn criterion(cfg: &RunConfig) -> Criterion {
    match cfg.adaptivity.criterion {
        CriterionChoice::Indicator => Criterion::Indicator,
        CriterionChoice::TrueError => Criterion::TrueError,
    }
}

/// Time grid of a time-stepping run. With `tau_factor` the step is that
/// multiple of the explicit stability limit on `mesh` and the last step is
/// shortened to end at `T`.
pub fn time_grid(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    mesh: &Arc<SimplicialMesh>,
) -> Result<TimeGrid, RunError> {
    let d = &cfg.discretisation;
    let grid = match d.tau_factor {
        None => TimeGrid::uniform(spec.t_final, d.k),
        Some(factor) => {
            let space = Arc::new(
                FESpace::scalar(mesh.clone(), d.degree)
                    .map_err(|e| RunError::Numerical(e.to_string()))?,
            );
            let tau = factor
                * stable_explicit_step(spec, &space, 0.0)
                    .map_err(|e| RunError::Numerical(e.to_string()))?;
            let n = (spec.t_final / tau * (1.0 - 1e-12)).ceil() as usize;
            let mut pts: Vec<f64> = (0..n).map(|k| k as f64 * tau).collect();
            pts.push(spec.t_final);
            TimeGrid::new(pts)
        }
    };
    grid.map_err(|e| RunError::Numerical(e.to_string()))
}

struct Sink {
    csv: Option<File>,
    dir: PathBuf,
    rows: Vec<Row>,
    clock: Instant,
    deterministic: bool,
    dump_meshes: bool,
}

impl Sink {
    fn io(path: &Path, e: std::io::Error) -> RunError {
        RunError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }

    fn wall(&mut self) -> f64 {
        let ms = self.clock.elapsed().as_secs_f64() * 1e3;
        self.clock = Instant::now();
        if self.deterministic {
            0.0
        } else {
            ms
        }
    }

    fn push(&mut self, mut row: Row, mesh: Option<&SimplicialMesh>) -> Result<(), RunError> {
        row.wall_ms = self.wall();
        if let Some(f) = self.csv.as_mut() {
            let path = self.dir.join("report.csv");
            writeln!(f, "{}", row.to_csv())
                .and_then(|_| f.flush())
                .map_err(|e| Sink::io(&path, e))?;
        }
        if let (true, Some(m)) = (self.dump_meshes, mesh) {
            let path = self.dir.join(format!("mesh_{}.txt", row.label));
            std::fs::write(&path, m.to_text()).map_err(|e| Sink::io(&path, e))?;
        }
        self.rows.push(row);
        Ok(())
    }
}

fn report_row(
    label: String,
    n_cells: usize,
    n_dofs: usize,
    r: &majorant_core::majorant::MajorantReport,
) -> Row {
    Row {
        label,
        n_cells,
        n_dofs,
        e_total: r.error_combined,
        m_d: r.m_d,
        m_eq: r.m_eq,
        majorant_total: r.total,
        i_eff_sqrt: r.i_eff_sqrt,
        i_eff_ratio: r.i_eff_ratio,
        wall_ms: 0.0,
    }
}

fn accumulated_row(
    label: String,
    n_cells: usize,
    n_dofs: usize,
    m_d: f64,
    m_eq: f64,
    m: f64,
    e: Option<f64>,
) -> Row {
    let ie = e.and_then(|e| efficiency_index(m, e));
    Row {
        label,
        n_cells,
        n_dofs,
        e_total: e,
        m_d,
        m_eq,
        majorant_total: m,
        i_eff_sqrt: ie.map(|x| x.0),
        i_eff_ratio: ie.map(|x| x.1),
        wall_ms: 0.0,
    }
}

fn blow_up_row(k: usize, n_cells: usize, n_dofs: usize) -> Row {
    Row {
        label: format!("blow-up:{}", k + 1),
        n_cells,
        n_dofs,
        e_total: None,
        m_d: f64::NAN,
        m_eq: f64::NAN,
        majorant_total: f64::NAN,
        i_eff_sqrt: None,
        i_eff_ratio: None,
        wall_ms: 0.0,
    }
}

/// Runs `cfg`, writing rows as they are produced. On a numerical failure the
/// rows so far are on disk and `summary.txt` records the failure.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, RunError> {
    cfg.validate()?;
    let (spec, mesh) = build_problem(cfg)?;
    let params = majorant_params(cfg)?;
    let dir = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&dir).map_err(|e| Sink::io(&dir, e))?;
    let csv = if cfg.output.csv {
        let path = dir.join("report.csv");
        let mut f = File::create(&path).map_err(|e| Sink::io(&path, e))?;
        writeln!(f, "{CSV_HEADER}").map_err(|e| Sink::io(&path, e))?;
        Some(f)
    } else {
        None
    };
    let mut sink = Sink {
        csv,
        dir: dir.clone(),
        rows: Vec::new(),
        clock: Instant::now(),
        deterministic: opts.deterministic,
        dump_meshes: cfg.output.mesh_dumps,
    };
    let mut warnings = Vec::new();
    let result = match cfg.discretisation.mode {
        Mode::Timestep => run_timestep(
            cfg,
            &spec,
            Arc::new(mesh),
            &params,
            &mut sink,
            &mut warnings,
        ),
        Mode::Spacetime => run_spacetime(
            cfg,
            &spec,
            Arc::new(mesh),
            &params,
            &mut sink,
            &mut warnings,
        ),
    };
    let (blow_up, failure) = match result {
        Ok(b) => (b, None),
        Err(e) => (None, Some(e)),
    };
    let summary = summary_text(cfg, &sink.rows, blow_up, &warnings, failure.as_ref());
    let path = dir.join("summary.txt");
    std::fs::write(&path, summary).map_err(|e| Sink::io(&path, e))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Outcome {
        rows: sink.rows,
        blow_up,
        warnings,
        dir,
    })
}

fn note_warning(warnings: &mut Vec<String>, label: &str, w: &Option<String>) {
    if let Some(w) = w {
        warnings.push(format!("{label}: {w}"));
    }
}

fn run_timestep(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    mesh: Arc<SimplicialMesh>,
    params: &MajorantParams,
    sink: &mut Sink,
    warnings: &mut Vec<String>,
) -> Result<Option<usize>, RunError> {
    let d = &cfg.discretisation;
    let a = &cfg.adaptivity;
    let grid = time_grid(cfg, spec, &mesh)?;
    let scheme = match d.scheme {
        SchemeChoice::Implicit => Scheme::Implicit,
        SchemeChoice::Explicit => Scheme::Explicit,
    };
    if a.study == Study::Adaptive {
        let mut pending: Result<(), RunError> = Ok(());
        let mut observe = |s: &SlabStep| {
            if pending.is_err() {
                return;
            }
            let label = (s.k + 1).to_string();
            note_warning(warnings, &label, &s.report.warning);
            let row = accumulated_row(
                label,
                s.n_cells,
                s.n_dofs,
                s.report.m_d,
                s.report.m_eq,
                s.accumulated_majorant,
                s.accumulated_error,
            );
            pending = sink.push(row, Some(&s.mesh));
        };
        adapt_slab_loop_observed(
            spec,
            mesh,
            &grid,
            params,
            marking(cfg),
            criterion(cfg),
            a.ref_per_slab,
            d.degree,
            &mut observe,
        )?;
        pending?;
        return Ok(None);
    }
    let per_slab = a.n_ref == 0;
    let mut mesh = mesh;
    for level in 0..=a.n_ref {
        let space = Arc::new(
            FESpace::scalar(mesh.clone(), d.degree)
                .map_err(|e| RunError::Numerical(e.to_string()))?,
        );
        let (nc, nd) = (mesh.n_cells(), space.n_dofs());
        let run: TimesteppingRun = if per_slab {
            let mut pending: Result<(), RunError> = Ok(());
            let run = run_timestepping_observed(spec, &space, &grid, params, scheme, |s| {
                if pending.is_err() {
                    return;
                }
                let label = (s.k + 1).to_string();
                note_warning(warnings, &label, &s.report.warning);
                let row = accumulated_row(
                    label,
                    nc,
                    nd,
                    s.report.m_d,
                    s.report.m_eq,
                    s.accumulated_majorant,
                    s.accumulated_error,
                );
                pending = sink.push(row, None);
            })?;
            pending?;
            run
        } else {
            run_timestepping_with_majorant(spec, &space, &grid, params, scheme)?
        };
        if !per_slab {
            let label = (level + 1).to_string();
            for s in &run.slabs {
                note_warning(warnings, &format!("{label}/{}", s.k + 1), &s.report.warning);
            }
            let m_d = run.slabs.iter().map(|s| s.report.m_d).sum();
            let m_eq = run.slabs.iter().map(|s| s.report.m_eq).sum();
            if run.blow_up.is_none() {
                let row = accumulated_row(
                    label,
                    nc,
                    nd,
                    m_d,
                    m_eq,
                    run.accumulated_majorant(),
                    run.accumulated_error(),
                );
                sink.push(row, Some(&mesh))?;
            }
        }
        if let Some(k) = run.blow_up {
            sink.push(blow_up_row(k, nc, nd), None)?;
            return Ok(Some(k));
        }
        if level < a.n_ref {
            mesh = Arc::new(next_level(spec, &mesh, d.mesh_n << (level + 1))?);
        }
    }
    Ok(None)
}

/// Uniform refinement that halves h: the structured mesh with `n` intervals
/// per axis on boxes, `d` bisection passes on polygons.
fn next_level(
    spec: &ProblemSpec,
    mesh: &SimplicialMesh,
    n: usize,
) -> Result<SimplicialMesh, RunError> {
    let m = match spec.domain {
        Domain::Box(_) => spec.domain.mesh(n),
        Domain::Polygon(_) => refine_uniform(mesh).map(|r| r.mesh),
    };
    m.map_err(|e| RunError::Numerical(e.to_string()))
}

fn run_spacetime(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    mesh: Arc<SimplicialMesh>,
    params: &MajorantParams,
    sink: &mut Sink,
    warnings: &mut Vec<String>,
) -> Result<Option<usize>, RunError> {
    let a = &cfg.adaptivity;
    let mut pending: Result<(), RunError> = Ok(());
    let mut observe = |s: &SpacetimeStep| {
        if pending.is_err() {
            return;
        }
        let label = (s.level + 1).to_string();
        note_warning(warnings, &label, &s.report.warning);
        pending = sink.push(
            report_row(label, s.n_cells, s.n_dofs, &s.report),
            Some(&s.mesh),
        );
    };
    match a.study {
        Study::Uniform => {
            let d = &cfg.discretisation;
            let nt = d.time_n.unwrap_or(d.mesh_n);
            box_spacetime_levels_observed(spec, d.mesh_n, nt, params, a.n_ref, &mut observe)?;
        }
        Study::Adaptive => {
            adapt_spacetime_loop_observed(
                spec,
                mesh,
                params,
                marking(cfg),
                criterion(cfg),
                a.n_ref,
                &mut observe,
            )?;
        }
    }
    pending?;
    Ok(None)
}

fn summary_text(
    cfg: &RunConfig,
    rows: &[Row],
    blow_up: Option<usize>,
    warnings: &[String],
    failure: Option<&RunError>,
) -> String {
    let p = &cfg.problem;
    let d = &cfg.discretisation;
    let mut s = String::new();
    let mode = match d.mode {
        Mode::Timestep => format!(
            "time stepping ({}, {})",
            match d.scheme {
                SchemeChoice::Implicit => "implicit",
                SchemeChoice::Explicit => "explicit",
            },
            match d.tau_factor {
                Some(f) => format!("tau = {f} x stable step"),
                None => format!("K = {}", d.k),
            }
        ),
        Mode::Spacetime => "space-time".to_string(),
    };
    let study = match cfg.adaptivity.study {
        Study::Uniform => "uniform refinement".to_string(),
        Study::Adaptive => format!(
            "adaptive refinement ({}, {})",
            match cfg.adaptivity.criterion {
                CriterionChoice::Indicator => "indicator",
                CriterionChoice::TrueError => "true error",
            },
            match cfg.adaptivity.marking {
                MarkingChoice::Bulk => format!("bulk theta = {}", cfg.adaptivity.theta),
                MarkingChoice::Average => "average".into(),
                MarkingChoice::All => "all".into(),
            }
        ),
    };
    let _ = writeln!(s, "problem: {}", p.name);
    let _ = writeln!(s, "sigma = {}, T = {}", p.sigma, p.t_final);
    let _ = writeln!(s, "scheme: {mode}, {study}");
    let _ = writeln!(
        s,
        "v degree {}, flux degree {}, nu = {}, gamma = {}",
        d.degree, d.flux_degree, cfg.majorant.nu, cfg.majorant.gamma
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>10} {:>9} {:>9} {:>13} {:>13} {:>13} {:>13} {:>8} {:>8}",
        "ref/slab", "EL", "DOF", "[e]^2", "m_d", "m_eq", "M", "I_sqrt", "I_ratio"
    );
    for r in rows {
        let o = |v: Option<f64>| v.map_or("nan".to_string(), fmt_e);
        let i = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.3}"));
        let _ = writeln!(
            s,
            "{:>10} {:>9} {:>9} {:>13} {:>13} {:>13} {:>13} {:>8} {:>8}",
            r.label,
            r.n_cells,
            r.n_dofs,
            o(r.e_total),
            fmt_e(r.m_d),
            fmt_e(r.m_eq),
            fmt_e(r.majorant_total),
            i(r.i_eff_sqrt),
            i(r.i_eff_ratio)
        );
    }
    let _ = writeln!(s);
    if let Some(k) = blow_up {
        let _ = writeln!(s, "status: blow-up detected on slab {}", k + 1);
    } else if let Some(e) = failure {
        let _ = writeln!(s, "status: failed: {e}");
    } else {
        let _ = writeln!(s, "status: ok");
    }
    if warnings.is_empty() {
        let _ = writeln!(s, "optimisation rounds: monotone");
    } else {
        let _ = writeln!(s, "warnings:");
        for w in warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e(0.0), "0.000000e+00");
        assert_eq!(fmt_e(3.5229e-1), "3.522900e-01");
        assert_eq!(fmt_e(-12345.678), "-1.234568e+04");
        assert_eq!(fmt_e(1e-100), "1.000000e-100");
        assert_eq!(fmt_e(f64::NAN), "nan");
        assert_eq!(fmt_e(f64::INFINITY), "inf");
    }

    #[test]
    fn matrix_and_vector_forms() {
        let a = parse_matrix("2", 2).unwrap();
        assert_eq!(a.as_constant().unwrap()[0][0], 2.0);
        assert_eq!(a.as_constant().unwrap()[0][1], 0.0);
        let a = parse_matrix("1, 0; 0, 10", 2).unwrap();
        assert_eq!(a.as_constant().unwrap()[1][1], 10.0);
        assert!(parse_matrix("1, 0", 2).is_err());
        assert!(parse_vector("0", 3).unwrap().is_zero());
        assert_eq!(parse_vector("1, x", 2).unwrap().dim(), 2);
        assert!(parse_vector("1", 2).is_err());
    }

    #[test]
    fn expression_errors_are_config_errors() {
        let mut c = RunConfig::template();
        c.problem.f = "sin(".into();
        match build_problem(&c) {
            Err(ConfigError::Value { key, .. }) => assert_eq!(key, "problem.f"),
            other => panic!("{other:?}"),
        }
    }
}
