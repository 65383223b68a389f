//! Backward and forward Euler steps on a fixed spatial mesh.

use super::{dirichlet_values, ParabolicError, ProblemSpec};
use crate::fem::{
    assemble_convection, assemble_load, assemble_mass, assemble_stiffness, lumped_mass,
    DiscreteField, FESpace,
};
use crate::linsolve::{solve_constrained, SparseMatrix};
use std::sync::Arc;

/// Linear solves inside a step are converged to this relative residual.
const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Ok,
    /// The update produced non-finite values.
    BlowUp,
}

/// `K(t) + B(t) + R(t)`: diffusion, convection and reaction.
fn operator(spec: &ProblemSpec, space: &FESpace, t: f64) -> Result<SparseMatrix, ParabolicError> {
    let mut op = assemble_stiffness(space, &spec.a, t)?;
    if !spec.b.is_zero() {
        op = op.lin_comb(1.0, &assemble_convection(space, &spec.b, t)?, 1.0);
    }
    if !spec.c.is_zero() {
        op = op.lin_comb(1.0, &assemble_mass(space, &spec.c, t)?, 1.0);
    }
    Ok(op)
}

fn check_space(spec: &ProblemSpec, space: &FESpace) -> Result<(), ParabolicError> {
    if space.components() != 1 || space.is_spacetime() || space.spatial_dim() != spec.dim {
        return Err(ParabolicError::Invalid(
            "time stepping needs a scalar space on the spatial mesh".into(),
        ));
    }
    Ok(())
}

/// Backward Euler with the load at the slab midpoint:
/// `(sigma/tau) M (v1 - v0) + Op(t + tau) v1 = (f(t + tau/2), phi)`.
/// Matrices are reused between steps of equal length when the operator
/// does not depend on time.
pub struct ImplicitStepper<'a> {
    spec: &'a ProblemSpec,
    space: Arc<FESpace>,
    mass: SparseMatrix,
    cached: Option<(f64, SparseMatrix)>,
}

impl<'a> ImplicitStepper<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        space: Arc<FESpace>,
    ) -> Result<ImplicitStepper<'a>, ParabolicError> {
        check_space(spec, &space)?;
        let mass = assemble_mass(&space, &crate::fem::ScalarCoef::constant(1.0), 0.0)?;
        Ok(ImplicitStepper {
            spec,
            space,
            mass,
            cached: None,
        })
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn step(
        &mut self,
        v_k: &DiscreteField,
        t_k: f64,
        tau: f64,
    ) -> Result<DiscreteField, ParabolicError> {
        if !(tau > 0.0) {
            return Err(ParabolicError::Invalid(format!(
                "time step {tau} must be positive"
            )));
        }
        if v_k.space().n_dofs() != self.space.n_dofs() {
            return Err(ParabolicError::Fem(crate::fem::FemError::MeshMismatch));
        }
        let spec = self.spec;
        let t1 = t_k + tau;
        let reuse =
            !spec.operator_depends_on_t() && matches!(&self.cached, Some((t, _)) if *t == tau);
        if !reuse {
            let op = operator(spec, &self.space, t1)?;
            let sys = self.mass.lin_comb(spec.sigma / tau, &op, 1.0);
            self.cached = Some((tau, sys));
        }
        let sys = &self.cached.as_ref().unwrap().1;
        let mut rhs = assemble_load(&self.space, &spec.f, t_k + 0.5 * tau)?;
        let mv = self.mass.mul_vec(v_k.dofs());
        for (r, m) in rhs.iter_mut().zip(&mv) {
            *r += spec.sigma / tau * m;
        }
        let fixed = dirichlet_values(spec, &self.space, t1)?;
        let x = solve_constrained(sys, &rhs, &fixed, spec.b.is_zero(), STEP_TOL)?;
        Ok(DiscreteField::new(self.space.clone(), x))
    }
}

pub fn step_implicit(
    spec: &ProblemSpec,
    space: &Arc<FESpace>,
    v_k: &DiscreteField,
    t_k: f64,
    tau: f64,
) -> Result<DiscreteField, ParabolicError> {
    ImplicitStepper::new(spec, space.clone())?.step(v_k, t_k, tau)
}

/// Forward Euler with lumped mass:
/// `(sigma/tau) M_L (v1 - v0) = (f(t), phi) - Op(t) v0`.
pub struct ExplicitStepper<'a> {
    spec: &'a ProblemSpec,
    space: Arc<FESpace>,
    lumped: Vec<f64>,
    cached: Option<SparseMatrix>,
}

impl<'a> ExplicitStepper<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        space: Arc<FESpace>,
    ) -> Result<ExplicitStepper<'a>, ParabolicError> {
        check_space(spec, &space)?;
        let lumped = lumped_mass(&space)?;
        Ok(ExplicitStepper {
            spec,
            space,
            lumped,
            cached: None,
        })
    }

    pub fn step(
        &mut self,
        v_k: &DiscreteField,
        t_k: f64,
        tau: f64,
    ) -> Result<(DiscreteField, StepStatus), ParabolicError> {
        if !(tau > 0.0) {
            return Err(ParabolicError::Invalid(format!(
                "time step {tau} must be positive"
            )));
        }
        let spec = self.spec;
        if !v_k.is_finite() {
            return Ok((v_k.clone(), StepStatus::BlowUp));
        }
        if self.cached.is_none() || spec.operator_depends_on_t() {
            self.cached = Some(operator(spec, &self.space, t_k)?);
        }
        let op = self.cached.as_ref().unwrap();
        let load = assemble_load(&self.space, &spec.f, t_k)?;
        let av = op.mul_vec(v_k.dofs());
        let mut x: Vec<f64> = v_k
            .dofs()
            .iter()
            .zip(load.iter().zip(&av))
            .zip(&self.lumped)
            .map(|((v, (l, a)), m)| v + tau / spec.sigma * (l - a) / m)
            .collect();
        for (i, val) in dirichlet_values(spec, &self.space, t_k + tau)? {
            x[i] = val;
        }
        let status = if x.iter().all(|v| v.is_finite()) {
            StepStatus::Ok
        } else {
            StepStatus::BlowUp
        };
        Ok((DiscreteField::new(self.space.clone(), x), status))
    }
}

pub fn step_explicit(
    spec: &ProblemSpec,
    space: &Arc<FESpace>,
    v_k: &DiscreteField,
    t_k: f64,
    tau: f64,
) -> Result<(DiscreteField, StepStatus), ParabolicError> {
    ExplicitStepper::new(spec, space.clone())?.step(v_k, t_k, tau)
}

/// Largest stable forward Euler step at time `t`, `2 sigma / lambda_max`
/// with `lambda_max` the spectral radius of `M_L^{-1} Op` on the free DOFs,
/// estimated by power iteration from a fixed start vector.
pub fn stable_explicit_step(
    spec: &ProblemSpec,
    space: &Arc<FESpace>,
    t: f64,
) -> Result<f64, ParabolicError> {
    check_space(spec, space)?;
    let op = operator(spec, space, t)?;
    let lumped = lumped_mass(space)?;
    let n = space.n_dofs();
    let mut free = vec![true; n];
    for (i, _) in dirichlet_values(spec, space, t)? {
        free[i] = false;
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            if free[i] {
                1.0 + (i as f64 * 0.618_033_988_75).fract()
            } else {
                0.0
            }
        })
        .collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let mut y = op.mul_vec(&x);
        for i in 0..n {
            y[i] = if free[i] { y[i] / lumped[i] } else { 0.0 };
        }
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let converged = (ny - lambda).abs() <= 1e-8 * ny;
        lambda = ny;
        x = y;
        if converged {
            break;
        }
    }
    if !(lambda > 0.0) {
        return Err(ParabolicError::Invalid(
            "operator has no positive spectrum on free DOFs".into(),
        ));
    }
    Ok(2.0 * spec.sigma / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ScalarCoef;
    use crate::mesh::build_box_mesh;
    use crate::parabolic::{interpolate, Domain};

    fn heat_1d(n: usize) -> (ProblemSpec, Arc<FESpace>) {
        let spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        let mesh = Arc::new(build_box_mesh(&[(0.0, 1.0)], &[n]).unwrap());
        (spec, Arc::new(FESpace::scalar(mesh, 1).unwrap()))
    }

    #[test]
    fn zero_data_gives_zero() {
        let (spec, space) = heat_1d(5);
        let v0 = DiscreteField::zeros(space.clone());
        let v1 = step_implicit(&spec, &space, &v0, 0.0, 0.1).unwrap();
        assert!(v1.dofs().iter().all(|&v| v == 0.0));
        let (v2, st) = step_explicit(&spec, &space, &v0, 0.0, 0.1).unwrap();
        assert_eq!(st, StepStatus::Ok);
        assert!(v2.dofs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_dof_matches_scalar_recurrence() {
        // two cells on (0,1), one interior node at x = 1/2 with h = 1/2:
        // M = 2h/3 = 1/3, K = 2/h = 4, load (1, phi) = h = 1/2
        let (mut spec, space) = heat_1d(2);
        spec.f = ScalarCoef::constant(1.0);
        spec.sigma = 2.0;
        let tau = 0.05;
        let mut v = DiscreteField::zeros(space.clone());
        let mut w: f64 = 0.0;
        let mut stepper = ImplicitStepper::new(&spec, space.clone()).unwrap();
        for k in 0..10 {
            v = stepper.step(&v, k as f64 * tau, tau).unwrap();
            // (sigma/tau)(1/3)(w1 - w) + 4 w1 = 1/2
            w = (0.5 + spec.sigma / tau / 3.0 * w) / (spec.sigma / tau / 3.0 + 4.0);
            assert!(
                (v.dofs()[1] - w).abs() < 1e-13,
                "step {k}: {} vs {w}",
                v.dofs()[1]
            );
        }
    }

    #[test]
    fn l2_norm_decays_without_source() {
        let spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0), (0.0, 1.0)]));
        let mesh = Arc::new(build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[8, 8]).unwrap());
        let space = Arc::new(FESpace::scalar(mesh, 1).unwrap());
        let mass = assemble_mass(&space, &ScalarCoef::constant(1.0), 0.0).unwrap();
        let mut v = interpolate(
            &ScalarCoef::parse("x*(1-x)*y*(1-y)*(1+x)").unwrap(),
            &space,
            0.0,
        )
        .unwrap();
        let mut stepper = ImplicitStepper::new(&spec, space.clone()).unwrap();
        let mut prev = mass.bilinear(v.dofs(), v.dofs());
        for k in 0..20 {
            v = stepper.step(&v, k as f64 * 0.01, 0.01).unwrap();
            let now = mass.bilinear(v.dofs(), v.dofs());
            assert!(now <= prev);
            prev = now;
        }
    }

    #[test]
    fn implicit_step_is_linear() {
        let (mut spec, space) = heat_1d(7);
        spec.b = crate::fem::VectorCoef::new(vec![ScalarCoef::constant(0.3)]);
        spec.c = ScalarCoef::constant(1.0);
        let v_a = interpolate(&ScalarCoef::parse("sin(pi*x)").unwrap(), &space, 0.0).unwrap();
        let v_b = interpolate(&ScalarCoef::parse("x*(1-x)*x").unwrap(), &space, 0.0).unwrap();
        let f_a = ScalarCoef::parse("x + t").unwrap();
        let f_b = ScalarCoef::parse("cos(3*x)").unwrap();
        let run = |v: &DiscreteField, f: &ScalarCoef| {
            let mut s = spec.clone();
            s.f = f.clone();
            step_implicit(&s, &space, v, 0.2, 0.05).unwrap()
        };
        let ra = run(&v_a, &f_a);
        let rb = run(&v_b, &f_b);
        let sum_v = DiscreteField::new(
            space.clone(),
            v_a.dofs()
                .iter()
                .zip(v_b.dofs())
                .map(|(a, b)| 2.0 * a - b)
                .collect(),
        );
        let sum_f = ScalarCoef::parse("2*(x + t) - cos(3*x)").unwrap();
        let rs = run(&sum_v, &sum_f);
        for i in 0..space.n_dofs() {
            assert!((rs.dofs()[i] - (2.0 * ra.dofs()[i] - rb.dofs()[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn explicit_blows_up_above_stability_limit() {
        let spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0), (0.0, 1.0)]));
        let mesh = Arc::new(build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[8, 8]).unwrap());
        let space = Arc::new(FESpace::scalar(mesh, 1).unwrap());
        let tau_s = stable_explicit_step(&spec, &space, 0.0).unwrap();
        let v0 = interpolate(&ScalarCoef::parse("x*(1-x)*y*(1-y)").unwrap(), &space, 0.0).unwrap();
        let max = |v: &DiscreteField| v.dofs().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // below the limit the iteration decays
        let mut st = ExplicitStepper::new(&spec, space.clone()).unwrap();
        let mut v = v0.clone();
        for k in 0..10 {
            v = st.step(&v, k as f64 * tau_s * 0.9, tau_s * 0.9).unwrap().0;
        }
        assert!(max(&v) < max(&v0));
        let mut v = v0.clone();
        for k in 0..10 {
            v = st.step(&v, k as f64 * tau_s * 4.0, tau_s * 4.0).unwrap().0;
        }
        assert!(max(&v) >= 10.0 * max(&v0));
    }

    #[test]
    fn explicit_and_implicit_agree_for_small_steps() {
        let (mut spec, space) = heat_1d(10);
        spec.f = ScalarCoef::parse("1 + x*t").unwrap();
        let v0 = interpolate(&ScalarCoef::parse("sin(pi*x)").unwrap(), &space, 0.0).unwrap();
        let run = |tau: f64, n: usize| {
            let (mut vi, mut ve) = (v0.clone(), v0.clone());
            let mut si = ImplicitStepper::new(&spec, space.clone()).unwrap();
            let mut se = ExplicitStepper::new(&spec, space.clone()).unwrap();
            for k in 0..n {
                vi = si.step(&vi, k as f64 * tau, tau).unwrap();
                ve = se.step(&ve, k as f64 * tau, tau).unwrap().0;
            }
            vi.dofs()
                .iter()
                .zip(ve.dofs())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let tau_s = stable_explicit_step(&spec, &space, 0.0).unwrap();
        let d1 = run(tau_s / 10.0, 40);
        // consistent vs lumped mass leaves an O(h^2) gap that does not shrink with tau
        assert!(d1 < 1e-2, "{d1}");
    }

    #[test]
    fn explicit_converges_at_first_order_in_time() {
        let (mut spec, space) = heat_1d(10);
        spec.f = ScalarCoef::parse("1 + x*t").unwrap();
        let v0 = interpolate(&ScalarCoef::parse("sin(pi*x)").unwrap(), &space, 0.0).unwrap();
        let tau_s = stable_explicit_step(&spec, &space, 0.0).unwrap();
        let run = |m: usize| {
            let tau = tau_s / m as f64;
            let mut se = ExplicitStepper::new(&spec, space.clone()).unwrap();
            let mut v = v0.clone();
            for k in 0..8 * m {
                v = se.step(&v, k as f64 * tau, tau).unwrap().0;
            }
            v
        };
        let (a, b, c) = (run(2), run(4), run(8));
        let diff = |x: &DiscreteField, y: &DiscreteField| {
            x.dofs()
                .iter()
                .zip(y.dofs())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!(ratio > 1.7 && ratio < 2.3, "{ratio}");
    }

    #[test]
    fn power_iteration_matches_dense_eigenvalue() {
        let (spec, space) = heat_1d(6);
        let tau = stable_explicit_step(&spec, &space, 0.0).unwrap();
        // interior: M_L = h, K = tridiag(-1, 2, -1)/h, lambda_max = 4 sin^2(5 pi / 12) / h^2
        let h = 1.0 / 6.0;
        let lam = 4.0 * (5.0 * std::f64::consts::PI / 12.0).sin().powi(2) / (h * h);
        assert!((tau - 2.0 / lam).abs() < 1e-6 * tau);
    }
}
