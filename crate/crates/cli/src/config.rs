//! INI-style run configuration.
//!
//! ```text
//! seed = 0
//!
//! [problem]
//! name = ex1
//! domain = "box 0 1 0 1"
//! exact_u = "x*(1-x)*y*(1-y)*(t^2+t+1)"
//! ```
//!
//! Lines are `key = value` under `[section]` headers; `#` and `;` start a
//! comment line. Values may be wrapped in double quotes. Unknown sections and
//! keys are errors that name the offending line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}' in section [{section}]")]
    UnknownKey {
        key: String,
        section: String,
        line: usize,
    },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { section: String, line: usize },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: key '{key}' given twice")]
    Duplicate { key: String, line: usize },
    #[error("{key}: {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{0}")]
    Other(String),
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["seed"]),
    (
        "problem",
        &[
            "name", "domain", "sigma", "a", "b", "c", "f", "u_d", "u_0", "exact_u", "t_final",
            "c_f", "nu_lower", "nu_upper",
        ],
    ),
    (
        "discretisation",
        &[
            "mode",
            "scheme",
            "k",
            "mesh_n",
            "time_n",
            "degree",
            "flux_degree",
            "tau_factor",
        ],
    ),
    ("majorant", &["nu", "gamma", "mu", "beta", "l_iter_max"]),
    (
        "adaptivity",
        &[
            "study",
            "criterion",
            "marking",
            "theta",
            "n_ref",
            "ref_per_slab",
        ],
    ),
    ("output", &["dir", "csv", "mesh_dumps"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Timestep,
    Spacetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionChoice {
    Indicator,
    TrueError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkingChoice {
    Bulk,
    Average,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Box(Vec<(f64, f64)>),
    Polygon(Vec<[f64; 2]>),
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Box(e) => e.len(),
            DomainSpec::Polygon(_) => 2,
        }
    }

    fn parse(s: &str) -> Result<DomainSpec, String> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(char::is_whitespace)
            .ok_or("expected 'box ...' or 'polygon ...'")?;
        let nums = |t: &str| -> Result<Vec<f64>, String> {
            t.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|w| !w.is_empty())
                .map(|w| {
                    w.parse::<f64>()
                        .map_err(|_| format!("'{w}' is not a number"))
                })
                .collect()
        };
        match kind {
            "box" => {
                let v = nums(rest)?;
                if v.is_empty() || v.len() % 2 != 0 || v.len() > 6 {
                    return Err("box needs one 'min max' pair per axis, 1 to 3 axes".into());
                }
                let e: Vec<(f64, f64)> = v.chunks(2).map(|p| (p[0], p[1])).collect();
                if e.iter().any(|(a, b)| !(a < b)) {
                    return Err("box axis with min >= max".into());
                }
                Ok(DomainSpec::Box(e))
            }
            "polygon" => {
                let v = nums(rest)?;
                if v.len() < 6 || v.len() % 2 != 0 {
                    return Err("polygon needs at least three 'x y' vertices".into());
                }
                Ok(DomainSpec::Polygon(
                    v.chunks(2).map(|p| [p[0], p[1]]).collect(),
                ))
            }
            _ => Err(format!("unknown domain kind '{kind}'")),
        }
    }

    fn render(&self) -> String {
        match self {
            DomainSpec::Box(e) => {
                let parts: Vec<String> = e.iter().map(|(a, b)| format!("{a} {b}")).collect();
                format!("box {}", parts.join(" "))
            }
            DomainSpec::Polygon(p) => {
                let parts: Vec<String> = p.iter().map(|q| format!("{} {}", q[0], q[1])).collect();
                format!("polygon {}", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemBlock {
    pub name: String,
    pub domain: DomainSpec,
    pub sigma: f64,
    /// Diffusion matrix: one entry for a multiple of the identity, otherwise
    /// rows separated by `;` and entries by `,`.
    pub a: String,
    /// Convection field, components separated by `,`.
    pub b: String,
    pub c: String,
    pub f: String,
    pub u_d: String,
    pub u_0: String,
    pub exact_u: Option<String>,
    pub t_final: f64,
    pub c_f: Option<f64>,
    pub nu_lower: Option<f64>,
    pub nu_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretisationBlock {
    pub mode: Mode,
    pub scheme: SchemeChoice,
    pub k: usize,
    /// Initial mesh: intervals per axis for boxes, `extent / mesh_n` edge
    /// length for polygons.
    pub mesh_n: usize,
    /// Time intervals of the initial space-time mesh; defaults to `mesh_n`.
    pub time_n: Option<usize>,
    pub degree: usize,
    pub flux_degree: usize,
    /// When set, the time step is this multiple of the explicit stability
    /// limit on the initial mesh and overrides `k`.
    pub tau_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantBlock {
    pub nu: f64,
    pub gamma: f64,
    pub mu: String,
    pub beta: f64,
    pub l_iter_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivityBlock {
    pub study: Study,
    pub criterion: CriterionChoice,
    pub marking: MarkingChoice,
    pub theta: f64,
    pub n_ref: usize,
    pub ref_per_slab: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub dir: String,
    pub csv: bool,
    pub mesh_dumps: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemBlock,
    pub discretisation: DiscretisationBlock,
    pub majorant: MajorantBlock,
    pub adaptivity: AdaptivityBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    /// A unit-interval heat problem with default settings everywhere.
    pub fn template() -> RunConfig {
        RunConfig {
            seed: 0,
            problem: ProblemBlock {
                name: "custom".into(),
                domain: DomainSpec::Box(vec![(0.0, 1.0)]),
                sigma: 1.0,
                a: "1".into(),
                b: "0".into(),
                c: "0".into(),
                f: "0".into(),
                u_d: "0".into(),
                u_0: "0".into(),
                exact_u: None,
                t_final: 1.0,
                c_f: None,
                nu_lower: None,
                nu_upper: None,
            },
            discretisation: DiscretisationBlock {
                mode: Mode::Timestep,
                scheme: SchemeChoice::Implicit,
                k: 10,
                mesh_n: 4,
                time_n: None,
                degree: 1,
                flux_degree: 2,
                tau_factor: None,
            },
            majorant: MajorantBlock {
                nu: 1.0,
                gamma: 1.0,
                mu: "0".into(),
                beta: 1.0,
                l_iter_max: 3,
            },
            adaptivity: AdaptivityBlock {
                study: Study::Uniform,
                criterion: CriterionChoice::Indicator,
                marking: MarkingChoice::Bulk,
                theta: 0.3,
                n_ref: 0,
                ref_per_slab: 1,
            },
            output: OutputBlock {
                dir: "out".into(),
                csv: true,
                mesh_dumps: false,
            },
        }
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let entries = parse_entries(text)?;
        let mut cfg = RunConfig::template();
        for ((section, key), (value, _)) in &entries {
            cfg.set(section, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        RunConfig::parse(&text)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        let err = |msg: String| ConfigError::Value {
            key: full.clone(),
            msg,
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| err(format!("'{v}' is not a number")))
        };
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| err(format!("'{v}' is not a non-negative integer")))
        };
        let boolean = |v: &str| match v {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            _ => Err(err(format!("'{v}' is not a boolean"))),
        };
        let opt_num = |v: &str| {
            if v == "auto" {
                Ok(None)
            } else {
                num(v).map(Some)
            }
        };
        let p = &mut self.problem;
        let d = &mut self.discretisation;
        let m = &mut self.majorant;
        let a = &mut self.adaptivity;
        let o = &mut self.output;
        match (section, key) {
            ("", "seed") => {
                self.seed = value
                    .parse()
                    .map_err(|_| err(format!("'{value}' is not a seed")))?
            }
            ("problem", "name") => p.name = value.into(),
            ("problem", "domain") => p.domain = DomainSpec::parse(value).map_err(err)?,
            ("problem", "sigma") => p.sigma = num(value)?,
            ("problem", "a") => p.a = value.into(),
            ("problem", "b") => p.b = value.into(),
            ("problem", "c") => p.c = value.into(),
            ("problem", "f") => p.f = value.into(),
            ("problem", "u_d") => p.u_d = value.into(),
            ("problem", "u_0") => p.u_0 = value.into(),
            ("problem", "exact_u") => {
                p.exact_u = if value == "none" {
                    None
                } else {
                    Some(value.into())
                }
            }
            ("problem", "t_final") => p.t_final = num(value)?,
            ("problem", "c_f") => p.c_f = opt_num(value)?,
            ("problem", "nu_lower") => p.nu_lower = opt_num(value)?,
            ("problem", "nu_upper") => p.nu_upper = opt_num(value)?,
            ("discretisation", "mode") => {
                d.mode = match value {
                    "timestep" => Mode::Timestep,
                    "spacetime" => Mode::Spacetime,
                    _ => return Err(err(format!("'{value}' is not timestep|spacetime"))),
                }
            }
            ("discretisation", "scheme") => {
                d.scheme = match value {
                    "implicit" => SchemeChoice::Implicit,
                    "explicit" => SchemeChoice::Explicit,
                    _ => return Err(err(format!("'{value}' is not implicit|explicit"))),
                }
            }
            ("discretisation", "k") => d.k = int(value)?,
            ("discretisation", "mesh_n") => d.mesh_n = int(value)?,
            ("discretisation", "time_n") => {
                d.time_n = if value == "auto" {
                    None
                } else {
                    Some(int(value)?)
                }
            }
            ("discretisation", "degree") => d.degree = int(value)?,
            ("discretisation", "flux_degree") => d.flux_degree = int(value)?,
            ("discretisation", "tau_factor") => d.tau_factor = opt_num(value)?,
            ("majorant", "nu") => m.nu = num(value)?,
            ("majorant", "gamma") => m.gamma = num(value)?,
            ("majorant", "mu") => m.mu = value.into(),
            ("majorant", "beta") => m.beta = num(value)?,
            ("majorant", "l_iter_max") => m.l_iter_max = int(value)?,
            ("adaptivity", "study") => {
                a.study = match value {
                    "uniform" => Study::Uniform,
                    "adaptive" => Study::Adaptive,
                    _ => return Err(err(format!("'{value}' is not uniform|adaptive"))),
                }
            }
            ("adaptivity", "criterion") => {
                a.criterion = match value {
                    "indicator" => CriterionChoice::Indicator,
                    "true_error" => CriterionChoice::TrueError,
                    _ => return Err(err(format!("'{value}' is not indicator|true_error"))),
                }
            }
            ("adaptivity", "marking") => {
                a.marking = match value {
                    "bulk" => MarkingChoice::Bulk,
                    "average" => MarkingChoice::Average,
                    "all" => MarkingChoice::All,
                    _ => return Err(err(format!("'{value}' is not bulk|average|all"))),
                }
            }
            ("adaptivity", "theta") => a.theta = num(value)?,
            ("adaptivity", "n_ref") => a.n_ref = int(value)?,
            ("adaptivity", "ref_per_slab") => a.ref_per_slab = int(value)?,
            ("output", "dir") => o.dir = value.into(),
            ("output", "csv") => o.csv = boolean(value)?,
            ("output", "mesh_dumps") => o.mesh_dumps = boolean(value)?,
            _ => unreachable!("keys are checked while reading"),
        }
        Ok(())
    }

    /// Checks value ranges and mode/scheme compatibility; expressions are
    /// parsed when the problem is built.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, msg: &str| {
            Err(ConfigError::Value {
                key: key.into(),
                msg: msg.into(),
            })
        };
        let (p, d, m, a) = (
            &self.problem,
            &self.discretisation,
            &self.majorant,
            &self.adaptivity,
        );
        if !(p.sigma > 0.0 && p.sigma.is_finite()) {
            return bad("problem.sigma", "must be positive");
        }
        if !(p.t_final > 0.0 && p.t_final.is_finite()) {
            return bad("problem.t_final", "must be positive");
        }
        if d.mode == Mode::Spacetime {
            if d.scheme == SchemeChoice::Explicit {
                return bad(
                    "discretisation.scheme",
                    "explicit stepping needs mode = timestep",
                );
            }
            if !matches!(p.domain, DomainSpec::Box(_)) {
                return bad("problem.domain", "space-time mode needs a box domain");
            }
            if p.domain.dim() > 2 {
                return bad(
                    "problem.domain",
                    "space-time mode supports 1 or 2 space dimensions",
                );
            }
            if d.degree != 1 {
                return bad("discretisation.degree", "space-time mode uses degree 1");
            }
        }
        if d.mode == Mode::Timestep && d.k == 0 && d.tau_factor.is_none() {
            return bad("discretisation.k", "needs at least one time step");
        }
        if d.scheme == SchemeChoice::Explicit && a.study == Study::Adaptive {
            return bad(
                "adaptivity.study",
                "adaptive refinement uses the implicit scheme",
            );
        }
        if let Some(f) = d.tau_factor {
            if !(f > 0.0 && f.is_finite()) {
                return bad("discretisation.tau_factor", "must be positive");
            }
        }
        if d.mesh_n == 0 {
            return bad("discretisation.mesh_n", "must be positive");
        }
        if d.time_n == Some(0) {
            return bad("discretisation.time_n", "must be positive");
        }
        if !(1..=2).contains(&d.degree) {
            return bad("discretisation.degree", "must be 1 or 2");
        }
        if !(1..=2).contains(&d.flux_degree) {
            return bad("discretisation.flux_degree", "must be 1 or 2");
        }
        if !(m.nu > 0.0 && m.nu <= 2.0) {
            return bad("majorant.nu", "must lie in (0, 2]");
        }
        if !(m.gamma >= 0.5) {
            return bad("majorant.gamma", "must be at least 1/2");
        }
        if !(m.beta > 0.0 && m.beta.is_finite()) {
            return bad("majorant.beta", "must be positive");
        }
        if m.l_iter_max == 0 {
            return bad("majorant.l_iter_max", "must be at least 1");
        }
        if a.marking == MarkingChoice::Bulk && !(a.theta > 0.0 && a.theta <= 1.0) {
            return bad("adaptivity.theta", "must lie in (0, 1]");
        }
        if a.criterion == CriterionChoice::TrueError
            && a.study == Study::Adaptive
            && p.exact_u.is_none()
        {
            return bad("adaptivity.criterion", "true_error needs problem.exact_u");
        }
        Ok(())
    }

    /// Serialises every field; parsing the result gives back `self`.
    pub fn to_ini(&self) -> String {
        let q = |s: &str| format!("\"{s}\"");
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x}"));
        let (p, d, m, a, o) = (
            &self.problem,
            &self.discretisation,
            &self.majorant,
            &self.adaptivity,
            &self.output,
        );
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[problem]");
        let _ = writeln!(s, "name = {}", p.name);
        let _ = writeln!(s, "domain = {}", q(&p.domain.render()));
        let _ = writeln!(s, "sigma = {}", p.sigma);
        for (k, v) in [
            ("a", &p.a),
            ("b", &p.b),
            ("c", &p.c),
            ("f", &p.f),
            ("u_d", &p.u_d),
            ("u_0", &p.u_0),
        ] {
            let _ = writeln!(s, "{k} = {}", q(v));
        }
        let _ = writeln!(
            s,
            "exact_u = {}",
            p.exact_u.as_deref().map_or("none".to_string(), q)
        );
        let _ = writeln!(s, "t_final = {}", p.t_final);
        let _ = writeln!(s, "c_f = {}", opt(p.c_f));
        let _ = writeln!(s, "nu_lower = {}", opt(p.nu_lower));
        let _ = writeln!(s, "nu_upper = {}", opt(p.nu_upper));
        let _ = writeln!(s, "\n[discretisation]");
        let mode = match d.mode {
            Mode::Timestep => "timestep",
            Mode::Spacetime => "spacetime",
        };
        let scheme = match d.scheme {
            SchemeChoice::Implicit => "implicit",
            SchemeChoice::Explicit => "explicit",
        };
        let _ = writeln!(
            s,
            "mode = {mode}\nscheme = {scheme}\nk = {}\nmesh_n = {}",
            d.k, d.mesh_n
        );
        let _ = writeln!(
            s,
            "time_n = {}",
            d.time_n.map_or("auto".to_string(), |n| n.to_string())
        );
        let _ = writeln!(s, "degree = {}\nflux_degree = {}", d.degree, d.flux_degree);
        let _ = writeln!(s, "tau_factor = {}", opt(d.tau_factor));
        let _ = writeln!(s, "\n[majorant]");
        let _ = writeln!(s, "nu = {}\ngamma = {}\nmu = {}", m.nu, m.gamma, q(&m.mu));
        let _ = writeln!(s, "beta = {}\nl_iter_max = {}", m.beta, m.l_iter_max);
        let _ = writeln!(s, "\n[adaptivity]");
        let study = match a.study {
            Study::Uniform => "uniform",
            Study::Adaptive => "adaptive",
        };
        let criterion = match a.criterion {
            CriterionChoice::Indicator => "indicator",
            CriterionChoice::TrueError => "true_error",
        };
        let marking = match a.marking {
            MarkingChoice::Bulk => "bulk",
            MarkingChoice::Average => "average",
            MarkingChoice::All => "all",
        };
        let _ = writeln!(
            s,
            "study = {study}\ncriterion = {criterion}\nmarking = {marking}"
        );
        let _ = writeln!(
            s,
            "theta = {}\nn_ref = {}\nref_per_slab = {}",
            a.theta, a.n_ref, a.ref_per_slab
        );
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(
            s,
            "dir = {}\ncsv = {}\nmesh_dumps = {}",
            q(&o.dir),
            o.csv,
            o.mesh_dumps
        );
        s
    }
}

type Entries = BTreeMap<(String, String), (String, usize)>;

fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut out = Entries::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || l.starts_with(';') {
            continue;
        }
        if let Some(rest) = l.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or(ConfigError::Syntax {
                line,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(ConfigError::UnknownSection {
                    section: name.into(),
                    line,
                });
            }
            section = name.into();
            continue;
        }
        let (k, v) = l.split_once('=').ok_or(ConfigError::Syntax {
            line,
            msg: format!("expected 'key = value', got '{l}'"),
        })?;
        let key = k.trim();
        let keys = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !keys.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.into(),
                section: section.clone(),
                line,
            });
        }
        let v = v.trim();
        let value = match v.strip_prefix('"') {
            Some(inner) => inner.strip_suffix('"').ok_or(ConfigError::Syntax {
                line,
                msg: "unterminated quoted value".into(),
            })?,
            None => v,
        };
        if out
            .insert((section.clone(), key.into()), (value.into(), line))
            .is_some()
        {
            return Err(ConfigError::Duplicate {
                key: key.into(),
                line,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_round_trips() {
        let c = RunConfig::template();
        assert_eq!(RunConfig::parse(&c.to_ini()).unwrap(), c);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let text = "seed = 1\n\n[problem]\nsigma = 2\nsgima = 3\n";
        match RunConfig::parse(text) {
            Err(ConfigError::UnknownKey { key, line, .. }) => {
                assert_eq!(key, "sgima");
                assert_eq!(line, 5);
            }
            other => panic!("{other:?}"),
        }
        let msg = RunConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("sgima") && msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn unknown_section_and_syntax() {
        assert!(matches!(
            RunConfig::parse("[solver]\n"),
            Err(ConfigError::UnknownSection { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[problem]\nsigma 2\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("[problem]\nsigma = 2\nsigma = 3\n"),
            Err(ConfigError::Duplicate { line: 3, .. })
        ));
    }

    #[test]
    fn quoted_values_and_comments() {
        let text = "# header\n[problem]\n; note\nf = \"x * (1 - x)\"\ndomain = \"polygon 0 0, 1 0, 0 1\"\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.problem.f, "x * (1 - x)");
        assert_eq!(
            c.problem.domain,
            DomainSpec::Polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        );
    }

    #[test]
    fn incompatible_mode_and_scheme() {
        let text = "[discretisation]\nmode = spacetime\nscheme = explicit\n";
        assert!(matches!(
            RunConfig::parse(text),
            Err(ConfigError::Value { .. })
        ));
        let text =
            "[discretisation]\nmode = spacetime\n[problem]\ndomain = \"polygon 0 0, 1 0, 0 1\"\n";
        assert!(matches!(
            RunConfig::parse(text),
            Err(ConfigError::Value { .. })
        ));
    }

    #[test]
    fn bad_values() {
        for text in [
            "[problem]\nsigma = -1\n",
            "[majorant]\nnu = 2.5\n",
            "[majorant]\ngamma = 0.4\n",
            "[adaptivity]\ntheta = 0\n",
            "[discretisation]\nmode = sideways\n",
            "[problem]\ndomain = \"box 1 0\"\n",
            "[output]\ncsv = maybe\n",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }
}
