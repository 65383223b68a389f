//! Random separable manufactured solutions `u = T(t) X(x) Y(y)` on the unit
//! box with zero lateral trace, and a finite-difference check of the
//! derived right-hand side.

use majorant_core::fem::{MatrixCoef, ScalarCoef, VectorCoef};
use majorant_core::parabolic::{Domain, ProblemSpec};
use rand::Rng;

/// `(g, g', g'')` as expression strings in variable `v`.
fn space_factor(rng: &mut impl Rng, v: &str) -> [String; 3] {
    match rng.gen_range(0..4) {
        0 => [format!("{v}*(1-{v})"), format!("(1-2*{v})"), "(-2)".into()],
        1 => {
            let k = rng.gen_range(1..=2) as f64;
            [
                format!("sin({k}*pi*{v})"),
                format!("({k}*pi*cos({k}*pi*{v}))"),
                format!("(-({k}*pi)^2*sin({k}*pi*{v}))"),
            ]
        }
        2 => {
            let a = round3(rng.gen_range(-0.9..2.0));
            [
                format!("{v}*(1-{v})*(1+{a}*{v})"),
                format!("(1+2*({a}-1)*{v}-3*{a}*{v}^2)"),
                format!("(2*({a}-1)-6*{a}*{v})"),
            ]
        }
        _ => [
            format!("{v}^2*(1-{v})"),
            format!("(2*{v}-3*{v}^2)"),
            format!("(2-6*{v})"),
        ],
    }
}

fn time_factor(rng: &mut impl Rng) -> [String; 2] {
    match rng.gen_range(0..4) {
        0 => ["(t^2+t+1)".into(), "(2*t+1)".into()],
        1 => {
            let k = round3(rng.gen_range(0.2..3.0));
            [format!("exp(-{k}*t)"), format!("(-{k}*exp(-{k}*t))")]
        }
        2 => {
            let k = round3(rng.gen_range(0.5..4.0));
            [
                format!("(1+0.5*sin({k}*t))"),
                format!("(0.5*{k}*cos({k}*t))"),
            ]
        }
        _ => {
            let a = round3(rng.gen_range(-0.5..2.0));
            [format!("(1+{a}*t)"), format!("({a})")]
        }
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub struct Manufactured {
    pub spec: ProblemSpec,
    pub u: String,
    pub f: String,
}

/// Draws coefficients and a solution in `dim` space dimensions. With
/// `transport` a constant convection and a positive reaction are added.
pub fn random_problem(rng: &mut impl Rng, dim: usize, transport: bool) -> Manufactured {
    let vars = ["x", "y"];
    let sf: Vec<[String; 3]> = (0..dim).map(|i| space_factor(rng, vars[i])).collect();
    let [tf, tf1] = time_factor(rng);
    let sigma = round3(rng.gen_range(0.3..3.0));
    // A = [[a0, a01], [a01, a1]], positive definite
    let a0 = round3(rng.gen_range(0.5..3.0));
    let a1 = round3(rng.gen_range(0.5..3.0));
    let a01 = if dim == 2 {
        round3(rng.gen_range(-0.4..0.4) * (a0 * a1).sqrt())
    } else {
        0.0
    };
    let (b, c) = if transport {
        let b: Vec<f64> = (0..dim).map(|_| round3(rng.gen_range(-2.0..2.0))).collect();
        (b, round3(rng.gen_range(0.2..5.0)))
    } else {
        (vec![0.0; dim], 0.0)
    };
    let prod = |skip: Option<usize>, which: usize| -> String {
        (0..dim)
            .map(|i| {
                if Some(i) == skip {
                    sf[i][which].clone()
                } else {
                    sf[i][0].clone()
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    };
    let p = prod(None, 0);
    let u = format!("{tf}*{p}");
    let mut f = format!("{sigma}*{tf1}*{p}");
    let diag = [a0, a1];
    for i in 0..dim {
        f += &format!(" - {}*{tf}*{}", diag[i], prod(Some(i), 2));
        if b[i] != 0.0 {
            f += &format!(" + {}*{tf}*{}", b[i], prod(Some(i), 1));
        }
    }
    if dim == 2 && a01 != 0.0 {
        f += &format!(" - 2*{a01}*{tf}*{}*{}", sf[0][1], sf[1][1]);
    }
    if c != 0.0 {
        f += &format!(" + {c}*{u}");
    }
    let ext = vec![(0.0, 1.0); dim];
    let mut spec = ProblemSpec::new(Domain::Box(ext));
    spec.sigma = sigma;
    spec.a = if dim == 1 {
        MatrixCoef::diagonal(&[a0])
    } else {
        MatrixCoef::new(
            2,
            vec![
                ScalarCoef::constant(a0),
                ScalarCoef::constant(a01),
                ScalarCoef::constant(a01),
                ScalarCoef::constant(a1),
            ],
        )
    };
    let ev = eigen_bounds(a0, a1, a01, dim);
    spec.nu_lower = ev.0;
    spec.nu_upper = ev.1;
    spec.b = VectorCoef::new(b.iter().map(|&v| ScalarCoef::constant(v)).collect());
    spec.c = ScalarCoef::constant(c);
    spec.f = ScalarCoef::parse(&f).unwrap();
    let t0 = ScalarCoef::parse(&tf).unwrap().eval(&[0.0], 0.0).unwrap();
    spec.u_0 = ScalarCoef::parse(&format!("{t0}*{p}")).unwrap();
    spec.exact = Some(ScalarCoef::parse(&u).unwrap());
    Manufactured { spec, u, f }
}

fn eigen_bounds(a0: f64, a1: f64, a01: f64, dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (a0, a0);
    }
    let m = 0.5 * (a0 + a1);
    let r = (0.25 * (a0 - a1) * (a0 - a1) + a01 * a01).sqrt();
    (m - r, m + r)
}

/// Largest `|sigma u_t - div(A grad u) + b . grad u + c u - f|` relative to its terms, over random
/// points, from central differences of `u`.
pub fn pde_residual(spec: &ProblemSpec, rng: &mut impl Rng, n: usize) -> f64 {
    let u = spec.exact.as_ref().unwrap();
    let d = spec.dim;
    let h = 1e-4;
    let ev = |x: &[f64], t: f64| u.eval(x, t).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..0.95)).collect();
        let t = rng.gen_range(0.05..0.95);
        let u_t = (ev(&x, t + h) - ev(&x, t - h)) / (2.0 * h);
        let a = spec.a.eval(&x, t).unwrap();
        let shift = |i: usize, s: f64, j: usize, r: f64| {
            let mut y = x.clone();
            y[i] += s;
            y[j] += r;
            ev(&y, t)
        };
        let mut div = 0.0;
        let mut adv = 0.0;
        let b = spec.b.eval(&x, t).unwrap();
        for i in 0..d {
            for j in 0..d {
                let dij = (shift(i, h, j, h) - shift(i, h, j, -h) - shift(i, -h, j, h)
                    + shift(i, -h, j, -h))
                    / (4.0 * h * h);
                div += a[i][j] * dij;
            }
            adv += b[i] * (shift(i, h, i, 0.0) - shift(i, -h, i, 0.0)) / (2.0 * h);
        }
        let c = spec.c.eval(&x, t).unwrap();
        let f = spec.f.eval(&x, t).unwrap();
        let r = spec.sigma * u_t - div + adv + c * ev(&x, t) - f;
        // relative to the largest term, since f may vanish identically
        let scale = [f, spec.sigma * u_t, div, adv, 1.0]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(r.abs() / scale);
    }
    worst
}
