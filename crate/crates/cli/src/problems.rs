//! Built-in benchmark problems.

use crate::config::{
    ConfigError, CriterionChoice, DomainSpec, MarkingChoice, Mode, RunConfig, SchemeChoice, Study,
};

pub const PROBLEM_IDS: &[&str] = &["ex1", "ex2", "ex3", "ex4", "ex5", "ex6", "ex8"];

pub const UNIT_SQUARE_U: &str = "x*(1-x)*y*(1-y)*(t^2+t+1)";

/// `"s*"` for a time-derivative factor, empty when `s = 1`.
fn factor(sigma: f64) -> String {
    if sigma == 1.0 {
        String::new()
    } else {
        format!("{sigma}*")
    }
}

fn unit_square(sigma: f64) -> RunConfig {
    let mut c = RunConfig::template();
    let p = &mut c.problem;
    p.domain = DomainSpec::Box(vec![(0.0, 1.0), (0.0, 1.0)]);
    p.sigma = sigma;
    p.exact_u = Some(UNIT_SQUARE_U.into());
    p.u_0 = "x*(1-x)*y*(1-y)".into();
    p.f = format!(
        "{}x*(1-x)*y*(1-y)*(2*t+1) + 2*(t^2+t+1)*(x*(1-x)+y*(1-y))",
        factor(sigma)
    );
    c
}

/// Configuration of a built-in problem. `sigma` replaces the default
/// `sigma = 1` and the data are regenerated for it.
pub fn builtin(id: &str, sigma: Option<f64>) -> Result<RunConfig, ConfigError> {
    let s = sigma.unwrap_or(1.0);
    if !(s > 0.0 && s.is_finite()) {
        return Err(ConfigError::Value {
            key: "sigma".into(),
            msg: format!("{s} must be positive"),
        });
    }
    let mut c = match id {
        "ex1" => {
            let mut c = unit_square(s);
            c.discretisation.k = 100;
            c.discretisation.mesh_n = 4;
            c.adaptivity.n_ref = 3;
            c
        }
        "ex2" => {
            let mut c = RunConfig::template();
            let p = &mut c.problem;
            p.domain = DomainSpec::Box(vec![(0.0, 1.0); 3]);
            p.sigma = s;
            p.exact_u = Some("x*(1-x)*y*(1-y)*z*(1-z)*(t^2+t+1)".into());
            p.u_0 = "x*(1-x)*y*(1-y)*z*(1-z)".into();
            p.f = format!(
                "{}x*(1-x)*y*(1-y)*z*(1-z)*(2*t+1) + 2*(t^2+t+1)*(y*(1-y)*z*(1-z)+x*(1-x)*z*(1-z)+x*(1-x)*y*(1-y))",
                factor(s)
            );
            c.discretisation.k = 10;
            c.discretisation.mesh_n = 2;
            c.discretisation.flux_degree = 1;
            c.adaptivity.n_ref = 1;
            c
        }
        "ex3" => {
            // the angle is measured from the positive x axis through the
            // domain, so the branch cut lies in the removed quadrant
            let r = "(x^2+y^2)^(1/3)*sin(2/3*(pi-atan2(y,-x)))";
            let mut c = RunConfig::template();
            let p = &mut c.problem;
            p.domain = DomainSpec::Polygon(vec![
                [-1.0, -1.0],
                [0.0, -1.0],
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [-1.0, 1.0],
            ]);
            p.sigma = s;
            p.exact_u = Some(format!("{r}*(t^2+t+1)"));
            p.u_d = format!("{r}*(t^2+t+1)");
            p.u_0 = r.into();
            p.f = format!("{}{r}*(2*t+1)", factor(s));
            c.discretisation.k = 10;
            c.discretisation.mesh_n = 4;
            c.adaptivity.study = Study::Adaptive;
            c.adaptivity.marking = MarkingChoice::Bulk;
            c.adaptivity.theta = 0.3;
            c
        }
        "ex4" => {
            let mut c = RunConfig::template();
            let p = &mut c.problem;
            p.domain = DomainSpec::Polygon(vec![
                [-1.0, -1.0],
                [-0.5, -1.0],
                [-0.5, 0.0],
                [0.5, 0.0],
                [0.5, -1.0],
                [1.0, -1.0],
                [1.0, 1.0],
                [-1.0, 1.0],
            ]);
            p.sigma = s;
            p.t_final = 2.0;
            p.f = "t*sin(t)*sin(pi*x) + t*cos(t)*sin(pi*y)".into();
            c.discretisation.k = 15;
            c.discretisation.mesh_n = 8;
            c.adaptivity.study = Study::Adaptive;
            c.adaptivity.marking = MarkingChoice::Bulk;
            c.adaptivity.theta = 0.3;
            c
        }
        "ex5" => {
            let mut c = RunConfig::template();
            let p = &mut c.problem;
            p.sigma = s;
            p.exact_u = Some("x*(1-x)*(t^2+t+1)".into());
            p.u_0 = "x*(1-x)".into();
            p.f = format!("{}x*(1-x)*(2*t+1) + 2*(t^2+t+1)", factor(s));
            c.discretisation.mode = Mode::Spacetime;
            c.discretisation.mesh_n = 2;
            c.adaptivity.n_ref = 5;
            c
        }
        "ex6" => {
            let mut c = unit_square(s);
            c.discretisation.mode = Mode::Spacetime;
            c.discretisation.mesh_n = 2;
            c.adaptivity.n_ref = 2;
            c
        }
        "ex8" => {
            let mut c = RunConfig::template();
            let p = &mut c.problem;
            p.sigma = s;
            p.exact_u = Some(format!("6*sin(pi*x)*exp(-pi^2*t/{s})"));
            p.u_0 = "6*sin(pi*x)".into();
            c.discretisation.mode = Mode::Spacetime;
            c.discretisation.mesh_n = 4;
            c.adaptivity.study = Study::Adaptive;
            c.adaptivity.criterion = CriterionChoice::Indicator;
            c.adaptivity.marking = MarkingChoice::Bulk;
            c.adaptivity.theta = 0.3;
            c.adaptivity.n_ref = 12;
            c
        }
        "ex7" => {
            return Err(ConfigError::Other(
                "ex7 needs a curved boundary, which is out of scope: only polygonal domains are supported".into(),
            ))
        }
        _ => {
            return Err(ConfigError::Other(format!(
                "unknown problem '{id}', expected one of {}",
                PROBLEM_IDS.join(", ")
            )))
        }
    };
    c.problem.name = id.into();
    c.discretisation.scheme = SchemeChoice::Implicit;
    c.output.dir = format!("out/{id}");
    c.validate()?;
    Ok(c)
}
