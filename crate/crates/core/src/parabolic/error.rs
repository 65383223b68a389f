//! True errors against a known exact solution.

use super::points::{integrate_cells, integrate_time_face, Approximation};
use super::{ParabolicError, ProblemSpec};
use crate::fem::{DiscreteField, FemError, Quadrature};
use crate::mesh::{FINAL, INITIAL};

/// Spatial quadrature degree used for errors.
pub const ERROR_QUAD_DEGREE: usize = 8;

/// Weights of the combined error `(2 - nu) e_d + (2 - 1/gamma) e_delta + sigma e_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorWeights {
    pub nu: f64,
    pub gamma: f64,
}

impl Default for ErrorWeights {
    fn default() -> Self {
        ErrorWeights {
            nu: 1.0,
            gamma: 1.0,
        }
    }
}

/// Error parts over one slab or one space-time mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorParts {
    /// `||grad_x e||^2_A`
    pub e_d: f64,
    /// `||delta e||^2`
    pub e_delta: f64,
    /// `||e||^2` at the initial time of the region
    pub e_0: f64,
    /// `||e||^2` at the final time of the region
    pub e_t: f64,
    pub per_cell_d: Vec<f64>,
    pub per_cell_delta: Vec<f64>,
}

impl ErrorParts {
    /// Volume part of the combined error, without the final-time term.
    pub fn volume(&self, w: ErrorWeights) -> f64 {
        (2.0 - w.nu) * self.e_d + (2.0 - 1.0 / w.gamma) * self.e_delta
    }

    pub fn combined(&self, sigma: f64, w: ErrorWeights) -> f64 {
        self.volume(w) + sigma * self.e_t
    }
}

/// `||u(., t) - v||^2` on the spatial mesh of `v`.
pub fn l2_error_at(spec: &ProblemSpec, v: &DiscreteField, t: f64) -> Result<f64, ParabolicError> {
    let u = spec.exact.as_ref().ok_or(ParabolicError::MissingExact)?;
    spatial_l2(&|x, tt| Ok(u.eval(x, tt)?), v, t)
}

pub(crate) fn spatial_l2<F>(u: &F, v: &DiscreteField, t: f64) -> Result<f64, ParabolicError>
where
    F: Fn(&[f64], f64) -> Result<f64, FemError>,
{
    let mesh = v.space().mesh();
    let d = mesh.dim();
    let rule = Quadrature::simplex(d, ERROR_QUAD_DEGREE);
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut total = 0.0;
    let mut x = [0.0; 3];
    for c in 0..mesh.n_cells() {
        v.eval_bary(c, &rule.points, &mut vals, &mut grads);
        let det = mesh.cell_measure(c) * crate::mesh::factorial(d);
        let mut s = 0.0;
        for (q, l) in rule.points.iter().enumerate() {
            mesh.point_at(c, &l[..=d], &mut x[..d]);
            let e = u(&x[..d], t)? - vals[q];
            s += rule.weights[q] * e * e;
        }
        total += s * det;
    }
    Ok(total)
}

/// Error parts of a slab or space-time approximation.
pub fn error_parts(
    spec: &ProblemSpec,
    approx: &Approximation,
) -> Result<ErrorParts, ParabolicError> {
    let u = spec.exact.as_ref().ok_or(ParabolicError::MissingExact)?;
    let sd = approx.spatial_dim();
    let transport = spec.has_transport();
    let cells = integrate_cells(approx, ERROR_QUAD_DEGREE, 2, |p, out| {
        let x = &p.x[..sd];
        let du = u.grad(x, p.t)?.0;
        let mut ge = [0.0; 3];
        for k in 0..sd {
            ge[k] = du[k] - p.grad_v[k];
        }
        let a = spec.a.eval(x, p.t)?;
        let mut ed = 0.0;
        for r in 0..sd {
            for k in 0..sd {
                ed += ge[r] * a[r][k] * ge[k];
            }
        }
        out[0] += p.w * ed;
        if transport {
            let e = u.eval(x, p.t)? - p.v;
            out[1] += p.w * spec.delta_sq(x, p.t)? * e * e;
        }
        Ok(())
    })?;
    let per_cell_d: Vec<f64> = cells.iter().step_by(2).copied().collect();
    let per_cell_delta: Vec<f64> = cells.iter().skip(1).step_by(2).copied().collect();
    let (e_0, e_t) = match *approx {
        Approximation::Slab {
            v_k,
            v_k1,
            t_k,
            tau,
            ..
        } => (
            l2_error_at(spec, v_k, t_k)?,
            l2_error_at(spec, v_k1, t_k + tau)?,
        ),
        Approximation::SpaceTime { v, .. } => {
            let sq = |x: &[f64], t: f64, v: f64| -> Result<f64, FemError> {
                let e = u.eval(x, t)? - v;
                Ok(e * e)
            };
            (
                integrate_time_face(v, INITIAL, ERROR_QUAD_DEGREE, sq)?,
                integrate_time_face(v, FINAL, ERROR_QUAD_DEGREE, sq)?,
            )
        }
    };
    Ok(ErrorParts {
        e_d: per_cell_d.iter().sum(),
        e_delta: per_cell_delta.iter().sum(),
        e_0,
        e_t,
        per_cell_d,
        per_cell_delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyError {
    pub e_d: f64,
    pub e_delta: f64,
    /// `||e||^2` at the final time
    pub e_t: f64,
    pub combined: f64,
}

/// Errors accumulated over consecutive slabs (or a single space-time
/// approximation); the final-time term comes from the last entry.
pub fn energy_error(
    spec: &ProblemSpec,
    approximations: &[Approximation],
    weights: ErrorWeights,
) -> Result<EnergyError, ParabolicError> {
    let mut e_d = 0.0;
    let mut e_delta = 0.0;
    let mut e_t = 0.0;
    for a in approximations {
        let p = error_parts(spec, a)?;
        e_d += p.e_d;
        e_delta += p.e_delta;
        e_t = p.e_t;
    }
    let combined =
        (2.0 - weights.nu) * e_d + (2.0 - 1.0 / weights.gamma) * e_delta + spec.sigma * e_t;
    Ok(EnergyError {
        e_d,
        e_delta,
        e_t,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{FESpace, ScalarCoef};
    use crate::mesh::build_box_mesh;
    use crate::parabolic::{interpolate, spacetime_box_mesh, Domain};
    use std::sync::Arc;

    #[test]
    fn reproducible_solution_has_zero_error() {
        let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0), (0.0, 1.0)]));
        spec.exact = Some(ScalarCoef::parse("(x + 2*y) * (1 + t)").unwrap());
        spec.c = ScalarCoef::constant(1.0);
        let mesh = Arc::new(build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[3, 3]).unwrap());
        let space = Arc::new(FESpace::scalar(mesh, 1).unwrap());
        let u = spec.exact.clone().unwrap();
        let v0 = interpolate(&u, &space, 0.0).unwrap();
        let v1 = interpolate(&u, &space, 0.5).unwrap();
        let approx = Approximation::Slab {
            v_k: &v0,
            v_k1: &v1,
            y: None,
            t_k: 0.0,
            tau: 0.5,
        };
        let e = energy_error(&spec, &[approx], ErrorWeights::default()).unwrap();
        assert!(e.combined.abs() < 1e-26, "{e:?}");
    }

    #[test]
    fn spacetime_error_of_known_perturbation() {
        // v = 0 against u = x(1-x) t on (0,1) x (0,1):
        // e_d = int_0^1 t^2 dt * int (1-2x)^2 dx = 1/3 * 1/3, e_T = 1/30, e_0 = 0
        let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        spec.exact = Some(ScalarCoef::parse("x*(1-x)*t").unwrap());
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0)], 1.0, 3, 2).unwrap());
        let space = Arc::new(FESpace::spacetime_scalar(m, 1).unwrap());
        let v = DiscreteField::zeros(space);
        let p = error_parts(&spec, &Approximation::SpaceTime { v: &v, y: None }).unwrap();
        assert!((p.e_d - 1.0 / 9.0).abs() < 1e-14);
        assert!((p.e_t - 1.0 / 30.0).abs() < 1e-14);
        assert!(p.e_0.abs() < 1e-30);
        let w = ErrorWeights {
            nu: 0.5,
            gamma: 1.0,
        };
        assert!((p.combined(2.0, w) - (1.5 / 9.0 + 2.0 / 30.0)).abs() < 1e-14);
    }

    #[test]
    fn interpolation_error_converges_at_second_order() {
        // u linear in t, so only the spatial interpolation error remains
        let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0), (0.0, 1.0)]));
        let u = ScalarCoef::parse("sin(pi*x)*sin(pi*y)*(1+t)").unwrap();
        spec.exact = Some(u.clone());
        let mut errs = Vec::new();
        for n in [4, 8, 16] {
            let mesh = Arc::new(build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[n, n]).unwrap());
            let space = Arc::new(FESpace::scalar(mesh, 1).unwrap());
            let v0 = interpolate(&u, &space, 0.0).unwrap();
            let v1 = interpolate(&u, &space, 1.0).unwrap();
            let a = Approximation::Slab {
                v_k: &v0,
                v_k1: &v1,
                y: None,
                t_k: 0.0,
                tau: 1.0,
            };
            errs.push(
                energy_error(&spec, &[a], ErrorWeights::default())
                    .unwrap()
                    .e_d,
            );
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 1.8 && rate < 2.2, "rate {rate}");
        }
    }

    #[test]
    fn energy_identity_holds_for_arbitrary_approximation() {
        // ||grad e||^2_A + ||delta e||^2 + sigma/2 ||e(T)||^2
        //   = sigma/2 ||e(0)||^2 + (f - sigma v_t - c v - b v_x, e) - (A v_x, e_x)
        let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        spec.sigma = 2.0;
        spec.a = crate::fem::MatrixCoef::diagonal(&[1.5]);
        spec.b = crate::fem::VectorCoef::new(vec![ScalarCoef::constant(0.5)]);
        spec.c = ScalarCoef::constant(1.0);
        let u = ScalarCoef::parse("sin(pi*x)*(1+t)").unwrap();
        spec.f = ScalarCoef::parse(
            "2*sin(pi*x) + 1.5*pi^2*sin(pi*x)*(1+t) + 0.5*pi*cos(pi*x)*(1+t) + sin(pi*x)*(1+t)",
        )
        .unwrap();
        spec.exact = Some(u.clone());
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0)], 1.0, 5, 3).unwrap());
        let space = Arc::new(FESpace::spacetime_scalar(m, 1).unwrap());
        // perturbed interpolant, still zero on the lateral boundary
        let mut v = interpolate(&u, &space, 0.0).unwrap();
        for i in 0..space.n_scalar() {
            let p = space.node(i);
            v.dofs_mut()[i] *= 1.0 + 0.3 * (3.0 * p[1]).sin();
        }
        let approx = Approximation::SpaceTime { v: &v, y: None };
        let parts = error_parts(&spec, &approx).unwrap();
        let lhs = parts.e_d + parts.e_delta + 0.5 * spec.sigma * parts.e_t;
        let rhs_cells = integrate_cells(&approx, ERROR_QUAD_DEGREE, 1, |p, out| {
            let x = &p.x[..1];
            let e = u.eval(x, p.t).unwrap() - p.v;
            let ex = u.grad(x, p.t).unwrap().0[0] - p.grad_v[0];
            let r = spec.f.eval(x, p.t).unwrap() - 2.0 * p.v_t - p.v - 0.5 * p.grad_v[0];
            out[0] += p.w * (r * e - 1.5 * p.grad_v[0] * ex);
            Ok(())
        })
        .unwrap();
        let rhs = 0.5 * spec.sigma * parts.e_0 + rhs_cells.iter().sum::<f64>();
        assert!(lhs > 1e-4);
        assert!(((lhs - rhs) / lhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }
}
