//! Quadrature over the space-time cylinder for both kinds of approximation.
//!
//! Every quadrature point carries the approximation `v`, its spatial
//! gradient and time derivative and, when supplied, the flux `y` and its
//! spatial divergence. Sums are formed per cell in parallel; callers reduce
//! the per-cell values in cell order, so results do not depend on the
//! number of threads.

use crate::fem::{
    cell_geometry, gauss_interval, DiscreteField, FemError, Quadrature, TIME_GAUSS_POINTS,
};
use crate::mesh::SimplicialMesh;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, Default)]
pub struct StPoint {
    pub x: [f64; 3],
    pub t: f64,
    /// quadrature weight including the Jacobian
    pub w: f64,
    pub v: f64,
    pub grad_v: [f64; 3],
    pub v_t: f64,
    pub y: [f64; 3],
    pub div_y: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum Approximation<'a> {
    /// Linear interpolation in time between two fields on a spatial mesh.
    Slab {
        v_k: &'a DiscreteField,
        v_k1: &'a DiscreteField,
        y: Option<(&'a DiscreteField, &'a DiscreteField)>,
        t_k: f64,
        tau: f64,
    },
    /// Fields on a space-time mesh.
    SpaceTime {
        v: &'a DiscreteField,
        y: Option<&'a DiscreteField>,
    },
}

impl<'a> Approximation<'a> {
    pub fn mesh(&self) -> &'a Arc<SimplicialMesh> {
        match self {
            Approximation::Slab { v_k, .. } => v_k.space().mesh(),
            Approximation::SpaceTime { v, .. } => v.space().mesh(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.mesh().n_cells()
    }

    pub fn spatial_dim(&self) -> usize {
        match self {
            Approximation::Slab { v_k, .. } => v_k.space().spatial_dim(),
            Approximation::SpaceTime { v, .. } => v.space().spatial_dim(),
        }
    }

    fn check(&self) -> Result<(), FemError> {
        let same = |a: &DiscreteField, b: &DiscreteField| {
            Arc::ptr_eq(a.space().mesh(), b.space().mesh())
                || **a.space().mesh() == **b.space().mesh()
        };
        let ok = match self {
            Approximation::Slab { v_k, v_k1, y, .. } => {
                same(v_k, v_k1) && y.map_or(true, |(a, b)| same(v_k, a) && same(v_k, b))
            }
            Approximation::SpaceTime { v, y } => y.map_or(true, |y| same(v, y)),
        };
        if ok {
            Ok(())
        } else {
            Err(FemError::MeshMismatch)
        }
    }
}

struct Buffers {
    a: Vec<f64>,
    b: Vec<f64>,
    ga: Vec<f64>,
    gb: Vec<f64>,
    ya: Vec<f64>,
    yb: Vec<f64>,
    gya: Vec<f64>,
    gyb: Vec<f64>,
}

impl Buffers {
    fn new() -> Buffers {
        Buffers {
            a: Vec::new(),
            b: Vec::new(),
            ga: Vec::new(),
            gb: Vec::new(),
            ya: Vec::new(),
            yb: Vec::new(),
            gya: Vec::new(),
            gyb: Vec::new(),
        }
    }
}

fn div_of(grads: &[f64], q: usize, m: usize, d: usize) -> f64 {
    (0..m).map(|c| grads[(q * m + c) * d + c]).sum()
}

/// Integrates over every cell: `f(point, out)` adds weighted contributions to
/// the `n_out` accumulators of the cell. Spatial quadrature is exact for
/// polynomials of degree `quad_degree`; slabs use 4 Gauss points in time.
/// Returns `n_cells * n_out` values.
pub fn integrate_cells<F>(
    approx: &Approximation,
    quad_degree: usize,
    n_out: usize,
    f: F,
) -> Result<Vec<f64>, FemError>
where
    F: Fn(&StPoint, &mut [f64]) -> Result<(), FemError> + Sync,
{
    approx.check()?;
    let mesh = approx.mesh();
    let d = mesh.dim();
    let sd = approx.spatial_dim();
    let rule = Quadrature::simplex(d, quad_degree);
    let per_cell: Vec<Result<Vec<f64>, FemError>> = (0..mesh.n_cells())
        .into_par_iter()
        .map_init(Buffers::new, |buf, c| {
            let mut out = vec![0.0; n_out];
            let (_, det) = cell_geometry(mesh, c);
            let mut p = StPoint::default();
            match *approx {
                Approximation::Slab {
                    v_k,
                    v_k1,
                    y,
                    t_k,
                    tau,
                } => {
                    v_k.eval_bary(c, &rule.points, &mut buf.a, &mut buf.ga);
                    v_k1.eval_bary(c, &rule.points, &mut buf.b, &mut buf.gb);
                    let m = match y {
                        Some((y0, y1)) => {
                            y0.eval_bary(c, &rule.points, &mut buf.ya, &mut buf.gya);
                            y1.eval_bary(c, &rule.points, &mut buf.yb, &mut buf.gyb);
                            y0.space().components()
                        }
                        None => 0,
                    };
                    let times = gauss_interval(TIME_GAUSS_POINTS, t_k, t_k + tau);
                    for (q, l) in rule.points.iter().enumerate() {
                        let mut x = [0.0; 3];
                        mesh.point_at(c, &l[..=d], &mut x[..d]);
                        let wq = rule.weights[q] * det;
                        let (div0, div1) = if m > 0 {
                            (div_of(&buf.gya, q, m, d), div_of(&buf.gyb, q, m, d))
                        } else {
                            (0.0, 0.0)
                        };
                        for &(t, wt) in &times {
                            let s = (t - t_k) / tau;
                            p.x = x;
                            p.t = t;
                            p.w = wq * wt;
                            p.v = (1.0 - s) * buf.a[q] + s * buf.b[q];
                            p.v_t = (buf.b[q] - buf.a[q]) / tau;
                            for k in 0..d {
                                p.grad_v[k] = (1.0 - s) * buf.ga[q * d + k] + s * buf.gb[q * d + k];
                            }
                            for k in 0..m {
                                p.y[k] = (1.0 - s) * buf.ya[q * m + k] + s * buf.yb[q * m + k];
                            }
                            p.div_y = (1.0 - s) * div0 + s * div1;
                            f(&p, &mut out)?;
                        }
                    }
                }
                Approximation::SpaceTime { v, y } => {
                    v.eval_bary(c, &rule.points, &mut buf.a, &mut buf.ga);
                    let m = match y {
                        Some(y) => {
                            y.eval_bary(c, &rule.points, &mut buf.ya, &mut buf.gya);
                            y.space().components()
                        }
                        None => 0,
                    };
                    for (q, l) in rule.points.iter().enumerate() {
                        let mut xt = [0.0; 4];
                        mesh.point_at(c, &l[..=d], &mut xt[..d]);
                        p.x = [0.0; 3];
                        p.x[..sd].copy_from_slice(&xt[..sd]);
                        p.t = xt[sd];
                        p.w = rule.weights[q] * det;
                        p.v = buf.a[q];
                        for k in 0..sd {
                            p.grad_v[k] = buf.ga[q * d + k];
                        }
                        p.v_t = buf.ga[q * d + sd];
                        for k in 0..m {
                            p.y[k] = buf.ya[q * m + k];
                        }
                        p.div_y = if m > 0 {
                            div_of(&buf.gya, q, m, d)
                        } else {
                            0.0
                        };
                        f(&p, &mut out)?;
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(mesh.n_cells() * n_out);
    for r in per_cell {
        all.extend(r?);
    }
    Ok(all)
}

/// Integrates `f(x, t, v)` over the boundary facets of a space-time mesh
/// carrying `tag` (e.g. "initial" or "final"), with `v` a P1 field.
pub fn integrate_time_face<F>(
    v: &DiscreteField,
    tag: &str,
    quad_degree: usize,
    f: F,
) -> Result<f64, FemError>
where
    F: Fn(&[f64], f64, f64) -> Result<f64, FemError>,
{
    let space = v.space();
    if space.degree() != 1 || space.components() != 1 || !space.is_spacetime() {
        return Err(FemError::NotScalar);
    }
    let mesh = space.mesh();
    let sd = space.spatial_dim();
    let rule = Quadrature::simplex(sd, quad_degree);
    let mut total = 0.0;
    for (facet, ftag) in mesh.boundary_facets() {
        if ftag != tag {
            continue;
        }
        // spatial measure of the facet
        let x0 = mesh.vertex(facet[0]);
        let mut jac = [[0.0; 3]; 3];
        for r in 0..sd {
            for k in 0..sd {
                jac[r][k] = mesh.vertex(facet[k + 1])[r] - x0[r];
            }
        }
        let det = crate::mesh::det(&jac, sd).abs();
        let mut cell_sum = 0.0;
        for (q, l) in rule.points.iter().enumerate() {
            let mut xt = [0.0; 4];
            let mut val = 0.0;
            for (i, &vtx) in facet.iter().enumerate() {
                let p = mesh.vertex(vtx);
                for k in 0..=sd {
                    xt[k] += l[i] * p[k];
                }
                val += l[i] * v.dofs()[vtx];
            }
            cell_sum += rule.weights[q] * f(&xt[..sd], xt[sd], val)?;
        }
        total += cell_sum * det;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{FESpace, ScalarCoef};
    use crate::mesh::build_box_mesh;
    use crate::parabolic::interpolate;

    #[test]
    fn slab_integrates_polynomial_exactly() {
        // v = x t on (0,1) x (0.5, 1.5): int v = 1/2 * 1 = 0.5
        let mesh = Arc::new(build_box_mesh(&[(0.0, 1.0)], &[3]).unwrap());
        let space = Arc::new(FESpace::scalar(mesh, 1).unwrap());
        let e = ScalarCoef::parse("x*t").unwrap();
        let v0 = interpolate(&e, &space, 0.5).unwrap();
        let v1 = interpolate(&e, &space, 1.5).unwrap();
        let approx = Approximation::Slab {
            v_k: &v0,
            v_k1: &v1,
            y: None,
            t_k: 0.5,
            tau: 1.0,
        };
        let r = integrate_cells(&approx, 4, 3, |p, out| {
            out[0] += p.w * p.v;
            out[1] += p.w * p.v_t;
            out[2] += p.w * p.grad_v[0];
            Ok(())
        })
        .unwrap();
        let sums: Vec<f64> = (0..3).map(|k| r.iter().skip(k).step_by(3).sum()).collect();
        assert!((sums[0] - 0.5).abs() < 1e-14);
        assert!((sums[1] - 0.5).abs() < 1e-14);
        assert!((sums[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spacetime_splits_gradient() {
        let mesh = Arc::new(build_box_mesh(&[(0.0, 2.0), (0.0, 1.0)], &[2, 3]).unwrap());
        let space = Arc::new(FESpace::spacetime_scalar(mesh.clone(), 1).unwrap());
        let v = interpolate(&ScalarCoef::parse("3*x - 2*t").unwrap(), &space, 0.0).unwrap();
        let vs = Arc::new(FESpace::spacetime_vector(mesh, 2).unwrap());
        let ydofs: Vec<f64> = (0..vs.n_dofs())
            .map(|i| vs.node(i % vs.n_scalar())[0] * 0.5)
            .collect();
        let y = DiscreteField::new(vs, ydofs);
        let approx = Approximation::SpaceTime { v: &v, y: Some(&y) };
        let r = integrate_cells(&approx, 2, 4, |p, out| {
            out[0] += p.w * p.grad_v[0];
            out[1] += p.w * p.v_t;
            out[2] += p.w * p.div_y;
            out[3] += p.w;
            Ok(())
        })
        .unwrap();
        let sums: Vec<f64> = (0..4).map(|k| r.iter().skip(k).step_by(4).sum()).collect();
        assert!((sums[3] - 2.0).abs() < 1e-14);
        assert!((sums[0] - 6.0).abs() < 1e-13);
        assert!((sums[1] + 4.0).abs() < 1e-13);
        assert!((sums[2] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn face_integral_on_initial_and_final() {
        let mut m = build_box_mesh(&[(0.0, 2.0), (0.0, 1.0)], &[4, 2]).unwrap();
        m.tag_spacetime_boundary(0.0, 1.0);
        let space = Arc::new(FESpace::spacetime_scalar(Arc::new(m), 1).unwrap());
        let v = interpolate(&ScalarCoef::parse("x*(1+t)").unwrap(), &space, 0.0).unwrap();
        // int_0^2 (x)^2 dx = 8/3, int_0^2 (2x)^2 dx = 32/3
        let i0 = integrate_time_face(&v, "initial", 2, |_, _, v| Ok(v * v)).unwrap();
        let i1 = integrate_time_face(&v, "final", 2, |_, _, v| Ok(v * v)).unwrap();
        assert!((i0 - 8.0 / 3.0).abs() < 1e-13);
        assert!((i1 - 32.0 / 3.0).abs() < 1e-13);
        let t1 = integrate_time_face(&v, "final", 2, |_, t, _| Ok(t)).unwrap();
        assert!((t1 - 2.0).abs() < 1e-14);
    }
}
