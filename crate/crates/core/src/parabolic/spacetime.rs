//! Stabilised Galerkin method on a space-time mesh.
//!
//! Test functions are `w + delta sigma w_t`. Per cell
//! `delta = h / (2 sigma) * (coth(Pe) - 1/Pe)` with `Pe = sigma h / (2 a_max)`,
//! which tends to `h / (2 sigma)` when transport in time dominates. For P1
//! trial functions the diffusion term of the strong residual vanishes when
//! `A` is constant and is dropped otherwise.

use super::{ParabolicError, ProblemSpec};
use crate::fem::coef::sym_eig_bounds;
use crate::fem::{assemble_matrix_with, assemble_vector_with, DiscreteField, FESpace};
use crate::linsolve::solve_constrained;
use crate::mesh::{build_box_mesh, MeshError, SimplicialMesh, DIRICHLET, INITIAL};
use std::sync::Arc;

const ST_TOL: f64 = 1e-12;

/// Space-time mesh of `extents x (0, t_final)` with `n_space` intervals per
/// spatial axis and `n_time` in time, boundary tagged initial/final/dirichlet.
pub fn spacetime_box_mesh(
    extents: &[(f64, f64)],
    t_final: f64,
    n_space: usize,
    n_time: usize,
) -> Result<SimplicialMesh, MeshError> {
    let mut ext = extents.to_vec();
    ext.push((0.0, t_final));
    let mut div = vec![n_space; extents.len()];
    div.push(n_time);
    let mut m = build_box_mesh(&ext, &div)?;
    m.tag_spacetime_boundary(0.0, t_final);
    Ok(m)
}

/// Upwind weight `coth(pe) - 1/pe`, by its series near zero.
fn upwind_weight(pe: f64) -> f64 {
    if pe < 1e-3 {
        pe / 3.0 - pe.powi(3) / 45.0
    } else {
        1.0 / pe.tanh() - 1.0 / pe
    }
}

fn stabilisation(spec: &ProblemSpec, m: &SimplicialMesh) -> Result<Vec<f64>, ParabolicError> {
    let sd = spec.dim;
    let sigma = spec.sigma;
    (0..m.n_cells())
        .map(|c| {
            let h = m.cell_diameter(c);
            let p = m.cell_centroid(c);
            let a = spec.a.eval(&p[..sd], p[sd])?;
            let (_, a_max) = sym_eig_bounds(&a, sd);
            let pe = sigma * h / (2.0 * a_max);
            Ok(h / (2.0 * sigma) * upwind_weight(pe))
        })
        .collect()
}

pub fn solve_spacetime(
    spec: &ProblemSpec,
    st_mesh: Arc<SimplicialMesh>,
) -> Result<DiscreteField, ParabolicError> {
    let sd = spec.dim;
    if st_mesh.dim() != sd + 1 {
        return Err(ParabolicError::Invalid(format!(
            "space-time mesh has dimension {}, expected {}",
            st_mesh.dim(),
            sd + 1
        )));
    }
    let (lo, hi) = st_mesh.bounding_box();
    let tol = 1e-10 * spec.t_final.max(1.0);
    if lo[sd].abs() > tol || (hi[sd] - spec.t_final).abs() > tol {
        return Err(ParabolicError::Invalid(format!(
            "space-time mesh covers t in [{}, {}], expected [0, {}]",
            lo[sd], hi[sd], spec.t_final
        )));
    }
    let space = Arc::new(FESpace::spacetime_scalar(st_mesh.clone(), 1)?);
    let nl = space.n_local();
    let sigma = spec.sigma;
    let delta = stabilisation(spec, &st_mesh)?;
    let (has_b, has_c) = (!spec.b.is_zero(), !spec.c.is_zero());
    let mat = assemble_matrix_with(&space, space.quad_degree(), 0.0, |cv, loc| {
        let ds = delta[cv.cell] * sigma;
        for q in 0..cv.n_q {
            let (x, t) = cv.xt(q);
            let a = spec.a.eval(x, t)?;
            let b = if has_b { spec.b.eval(x, t)? } else { [0.0; 3] };
            let c = if has_c { spec.c.eval(x, t)? } else { 0.0 };
            let w = cv.jxw(q);
            for j in 0..nl {
                let gj = cv.grad(q, j);
                let mut agj = [0.0; 3];
                for r in 0..sd {
                    agj[r] = (0..sd).map(|k| a[r][k] * gj[k]).sum();
                }
                let transport =
                    sigma * gj[sd] + (0..sd).map(|k| b[k] * gj[k]).sum::<f64>() + c * cv.phi(q, j);
                for i in 0..nl {
                    let gi = cv.grad(q, i);
                    let test = cv.phi(q, i) + ds * gi[sd];
                    let diff: f64 = (0..sd).map(|r| agj[r] * gi[r]).sum();
                    loc[i * nl + j] += w * (transport * test + diff);
                }
            }
        }
        Ok(())
    })?;
    let rhs = assemble_vector_with(&space, space.quad_degree(), 0.0, |cv, loc| {
        let ds = delta[cv.cell] * sigma;
        for q in 0..cv.n_q {
            let (x, t) = cv.xt(q);
            let fw = cv.jxw(q) * spec.f.eval(x, t)?;
            for i in 0..nl {
                loc[i] += fw * (cv.phi(q, i) + ds * cv.grad(q, i)[sd]);
            }
        }
        Ok(())
    })?;
    let mut fixed: Vec<(usize, f64)> = Vec::new();
    for i in space.boundary_nodes(|t| t == INITIAL) {
        fixed.push((i, spec.u_0.eval(&space.node(i)[..sd], 0.0)?));
    }
    // lateral data wins on the edge t = 0 of the lateral boundary
    for i in space.boundary_nodes(|t| t == DIRICHLET) {
        let p = space.node(i);
        fixed.push((i, spec.u_d.eval(&p[..sd], p[sd])?));
    }
    let x = solve_constrained(&mat, &rhs, &fixed, false, ST_TOL)?;
    let field = DiscreteField::new(space, x);
    if !field.is_finite() {
        return Err(ParabolicError::Fem(crate::fem::FemError::NonFinite));
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ScalarCoef;
    use crate::parabolic::Domain;

    #[test]
    fn upwind_weight_limits() {
        assert!((upwind_weight(1e-4) - 1e-4 / 3.0).abs() < 1e-13);
        assert!(
            (upwind_weight(1e-3 * (1.0 + 1e-12)) - upwind_weight(1e-3 * (1.0 - 1e-12))).abs()
                < 1e-12
        );
        assert!((upwind_weight(50.0) - (1.0 - 0.02)).abs() < 1e-12);
    }

    #[test]
    fn zero_problem_gives_zero() {
        let spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0)], 1.0, 4, 4).unwrap());
        let v = solve_spacetime(&spec, m).unwrap();
        assert!(v.dofs().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_wrong_time_range() {
        let spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0)], 0.5, 4, 4).unwrap());
        assert!(solve_spacetime(&spec, m).is_err());
    }

    #[test]
    fn reproduces_data_on_constrained_nodes() {
        let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        spec.u_0 = ScalarCoef::parse("sin(pi*x)").unwrap();
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0)], 1.0, 4, 4).unwrap());
        let v = solve_spacetime(&spec, m).unwrap();
        for i in 0..v.space().n_scalar() {
            let p = v.space().node(i);
            if p[1] == 0.0 {
                assert!((v.dofs()[i] - (std::f64::consts::PI * p[0]).sin()).abs() < 1e-15);
            }
            if p[0] == 0.0 || p[0] == 1.0 {
                assert_eq!(v.dofs()[i], 0.0);
            }
        }
    }

    fn final_slice_error(n: usize) -> f64 {
        let mut spec = ProblemSpec::new(Domain::Box(vec![(0.0, 1.0)]));
        spec.u_0 = ScalarCoef::parse("sin(pi*x)").unwrap();
        spec.t_final = 0.25;
        let m = Arc::new(spacetime_box_mesh(&[(0.0, 1.0)], 0.25, n, n / 4).unwrap());
        let v = solve_spacetime(&spec, m).unwrap();
        let decay = (-std::f64::consts::PI.powi(2) * 0.25).exp();
        let mut err = 0.0f64;
        for i in 0..v.space().n_scalar() {
            let p = v.space().node(i);
            if (p[1] - 0.25).abs() < 1e-14 {
                err = err.max((v.dofs()[i] - decay * (std::f64::consts::PI * p[0]).sin()).abs());
            }
        }
        err
    }

    #[test]
    fn converges_to_decaying_mode() {
        let e1 = final_slice_error(16);
        let e2 = final_slice_error(32);
        let e3 = final_slice_error(64);
        assert!(e1 < 3e-2, "{e1}");
        // second order at the nodes
        assert!(e2 < 0.3 * e1 && e3 < 0.3 * e2, "{e1} {e2} {e3}");
    }
}
