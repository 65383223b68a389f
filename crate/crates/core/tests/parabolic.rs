use majorant_core::fem::{assemble_mass, FESpace, ScalarCoef};
use majorant_core::mesh::build_box_mesh;
use majorant_core::parabolic::{
    interpolate, solve_spacetime, spacetime_box_mesh, step_implicit, Domain, ProblemSpec, TimeGrid,
};
use proptest::prelude::*;
use std::sync::Arc;

fn square_space(n: usize, degree: usize) -> Arc<FESpace> {
    let m = build_box_mesh(&[(0.0, 1.0), (0.0, 1.0)], &[n, n]).unwrap();
    Arc::new(FESpace::scalar(Arc::new(m), degree).unwrap())
}

fn heat(f: &str, u0: &str) -> ProblemSpec {
    let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0); 2]));
    spec.f = ScalarCoef::parse(f).unwrap();
    spec.u_0 = ScalarCoef::parse(u0).unwrap();
    spec
}

#[test]
fn implicit_step_is_linear_in_data() {
    let space = square_space(6, 2);
    let a = heat("x*y*exp(-t)", "sin(pi*x)*sin(pi*y)");
    let b = heat("1 + x", "x*(1-x)*y*(1-y)");
    let ab = heat(
        "x*y*exp(-t) + 1 + x",
        "sin(pi*x)*sin(pi*y) + x*(1-x)*y*(1-y)",
    );
    let step = |s: &ProblemSpec| {
        let v = interpolate(&s.u_0, &space, 0.0).unwrap();
        step_implicit(s, &space, &v, 0.1, 0.05).unwrap().into_dofs()
    };
    let (va, vb, vab) = (step(&a), step(&b), step(&ab));
    for i in 0..va.len() {
        assert!((va[i] + vb[i] - vab[i]).abs() < 1e-10, "dof {i}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn free_decay_does_not_grow(
        n in 2usize..8,
        degree in 1usize..=2,
        tau in 1e-3f64..0.5,
        kx in 1u32..4,
        ky in 1u32..4,
    ) {
        let space = square_space(n, degree);
        let spec = heat("0", &format!("sin({kx}*pi*x)*sin({ky}*pi*y) + x*(1-x)"));
        let mass = assemble_mass(&space, &ScalarCoef::constant(1.0), 0.0).unwrap();
        let mut v = interpolate(&spec.u_0, &space, 0.0).unwrap();
        // the interpolant of u_0 is not zero on the boundary; start from the
        // first step so the Dirichlet values hold
        v = step_implicit(&spec, &space, &v, 0.0, tau).unwrap();
        let mut last = mass.bilinear(v.dofs(), v.dofs());
        for k in 1..6 {
            v = step_implicit(&spec, &space, &v, k as f64 * tau, tau).unwrap();
            let now = mass.bilinear(v.dofs(), v.dofs());
            prop_assert!(now <= last * (1.0 + 1e-12));
            last = now;
        }
    }

    #[test]
    fn uniform_grid_invariants(t_final in 0.01f64..10.0, k in 1usize..200) {
        let g = TimeGrid::uniform(t_final, k).unwrap();
        prop_assert_eq!(g.n_slabs(), k);
        prop_assert_eq!(g.t(0), 0.0);
        prop_assert_eq!(g.t_final(), t_final);
        let sum: f64 = (0..k).map(|i| g.tau(i)).sum();
        prop_assert!((sum - t_final).abs() < 1e-12 * t_final);
        prop_assert!((0..k).all(|i| g.tau(i) > 0.0));
    }
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(TimeGrid::new(vec![0.0]).is_err());
    assert!(TimeGrid::new(vec![0.1, 0.5]).is_err());
    assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
    assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
    assert!(TimeGrid::uniform(1.0, 0).is_err());
    assert!(TimeGrid::uniform(-1.0, 3).is_err());
}

/// One space-time layer over `(0, tau)` and one backward Euler step on the
/// same spatial mesh approximate the same function at `t = tau`; their gap
/// shrinks with the step like the error of each.
#[test]
fn single_layer_matches_one_implicit_step() {
    let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
    spec.f = ScalarCoef::parse("x*(1-x)*(2*t+1) + 2*(t^2+t+1)").unwrap();
    spec.u_0 = ScalarCoef::parse("x*(1-x)").unwrap();
    let mut gaps = Vec::new();
    for n in [8usize, 16, 32] {
        let tau = 1.0 / n as f64;
        spec.t_final = tau;
        let m = build_box_mesh(&[(0.0, 1.0)], &[n]).unwrap();
        let space = Arc::new(FESpace::scalar(Arc::new(m), 1).unwrap());
        let v0 = interpolate(&spec.u_0, &space, 0.0).unwrap();
        let v1 = step_implicit(&spec, &space, &v0, 0.0, tau).unwrap();
        let st = spacetime_box_mesh(&[(0.0, 1.0)], tau, n, 1).unwrap();
        let w = solve_spacetime(&spec, Arc::new(st)).unwrap();
        let mut gap: f64 = 0.0;
        for i in 0..w.space().n_dofs() {
            let node = w.space().node(i);
            if (node[1] - tau).abs() < 1e-14 {
                let j = (0..space.n_dofs())
                    .find(|&j| (space.node(j)[0] - node[0]).abs() < 1e-14)
                    .unwrap();
                gap = gap.max((w.dofs()[i] - v1.dofs()[j]).abs());
            }
        }
        gaps.push(gap);
    }
    assert!(gaps[0] < 0.05, "{gaps:?}");
    assert!(gaps[2] < 0.5 * gaps[0], "{gaps:?}");
}
