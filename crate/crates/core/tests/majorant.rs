use majorant_core::fem::{FESpace, ScalarCoef};
use majorant_core::majorant::{
    majorant_general, optimize_flux_spacetime, project_flux, simplified_total, MajorantParams,
    SlabOptimizer,
};
use majorant_core::mesh::build_box_mesh;
use majorant_core::parabolic::{
    interpolate, solve_spacetime, spacetime_box_mesh, step_implicit, Domain, ProblemSpec,
    SlabSolution,
};
use proptest::prelude::*;
use std::sync::Arc;

/// `u = (t^2 + t + 1) x (1 - x) y (1 - y)` for the heat equation.
fn unit_square() -> ProblemSpec {
    let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0); 2]));
    spec.f =
        ScalarCoef::parse("(2*t+1)*x*(1-x)*y*(1-y) + 2*(t^2+t+1)*(x*(1-x) + y*(1-y))").unwrap();
    spec.u_0 = ScalarCoef::parse("x*(1-x)*y*(1-y)").unwrap();
    spec.exact = Some(ScalarCoef::parse("(t^2+t+1)*x*(1-x)*y*(1-y)").unwrap());
    spec
}

fn first_slab(spec: &ProblemSpec, n: usize, tau: f64) -> SlabSolution {
    let m = Arc::new(build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[n, n]).unwrap());
    let space = Arc::new(FESpace::scalar(m, 1).unwrap());
    let v_k = interpolate(&spec.u_0, &space, 0.0).unwrap();
    let v_k1 = step_implicit(spec, &space, &v_k, 0.0, tau).unwrap();
    SlabSolution {
        v_k,
        v_k1,
        t_k: 0.0,
        tau,
        k: 0,
    }
}

#[test]
fn general_form_agrees_with_simplified_form() {
    let spec = unit_square();
    let slab = first_slab(&spec, 6, 0.1);
    let params = MajorantParams::default();
    let opt = SlabOptimizer::new(&spec, &params, slab.v_k.space().mesh().clone()).unwrap();
    let y_k = project_flux(&spec, &slab.v_k, opt.flux_space(), 0.0).unwrap();
    let (y_k1, report) = opt.optimize(&slab, &y_k).unwrap();
    let simple = simplified_total(
        report.m_d,
        report.m_eq,
        report.beta_final,
        params.nu,
        spec.c_f,
        spec.nu_lower,
        report.sigma0_term,
    );
    assert!((simple - report.total).abs() <= 1e-13 * report.total);
    let general = MajorantParams {
        beta: report.beta_final,
        ..params.clone()
    };
    let g = majorant_general(&spec, &[slab.approximation(Some((&y_k, &y_k1)))], &general).unwrap();
    assert!((g.total - report.total).abs() <= 1e-13 * report.total);
    assert!((g.m_d - report.m_d).abs() <= 1e-13 * report.m_d);
    assert!(report.is_monotone(1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn slab_majorant_bounds_error(
        n in 2usize..10,
        tau in 0.01f64..0.5,
        nu in 0.2f64..2.0,
        gamma in 0.5f64..4.0,
        mu in 0.0f64..1.0,
        flux_degree in 1usize..=2,
    ) {
        let mut spec = unit_square();
        spec.c = ScalarCoef::constant(1.0);
        spec.f = ScalarCoef::parse(
            "(2*t+1)*x*(1-x)*y*(1-y) + 2*(t^2+t+1)*(x*(1-x) + y*(1-y)) + (t^2+t+1)*x*(1-x)*y*(1-y)",
        ).unwrap();
        let slab = first_slab(&spec, n, tau);
        let base = MajorantParams { flux_degree, ..MajorantParams::default() };
        let opt = SlabOptimizer::new(&spec, &base, slab.v_k.space().mesh().clone()).unwrap();
        let y_k = project_flux(&spec, &slab.v_k, opt.flux_space(), 0.0).unwrap();
        let (y_k1, report) = opt.optimize(&slab, &y_k).unwrap();
        let eval = MajorantParams {
            nu,
            gamma,
            mu: ScalarCoef::constant(mu),
            beta: report.beta_final,
            ..base
        };
        let g = majorant_general(&spec, &[slab.approximation(Some((&y_k, &y_k1)))], &eval).unwrap();
        let lhs = g.error_combined.unwrap();
        prop_assert!(lhs <= g.total * (1.0 + 1e-8), "lhs {} > M {}", lhs, g.total);
    }

    #[test]
    fn spacetime_majorant_bounds_error(ns in 2usize..6, nt in 2usize..6) {
        let spec = unit_square();
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], 1.0, ns, nt).unwrap());
        let v = solve_spacetime(&spec, m).unwrap();
        let params = MajorantParams { flux_degree: 1, ..MajorantParams::default() };
        let (_, report) = optimize_flux_spacetime(&spec, &v, &params).unwrap();
        let lhs = report.error_combined.unwrap();
        prop_assert!(lhs <= report.total * (1.0 + 1e-8));
        prop_assert!(report.is_monotone(1e-12));
        prop_assert_eq!(report.rounds.len(), 2 * params.l_iter_max);
    }
}
