use super::coef::is_spd;
use super::*;
use crate::linsolve::{Pattern, SparseMatrix};
use rayon::prelude::*;

/// Cells whose local contributions are computed in parallel before being
/// added to the global matrix in cell order. The scatter is sequential, so
/// results do not depend on the thread count.
const CHUNK: usize = 2048;

pub fn pattern(space: &FESpace) -> Pattern {
    let mesh = space.mesh();
    let mut all = Vec::with_capacity(mesh.n_cells());
    let mut buf = Vec::new();
    for c in 0..mesh.n_cells() {
        space.cell_dofs_into(c, &mut buf);
        all.push(buf.clone());
    }
    Pattern::from_element_dofs(
        space.n_dofs(),
        space.n_dofs(),
        all.iter().map(|d| (d.as_slice(), d.as_slice())),
    )
}

/// Assembles a matrix from per-cell local matrices (row-major, local DOFs
/// ordered component-major).
pub fn assemble_matrix_with<F>(
    space: &FESpace,
    quad_degree: usize,
    time: f64,
    local: F,
) -> Result<SparseMatrix, FemError>
where
    F: Fn(&CellValues, &mut [f64]) -> Result<(), FemError> + Sync,
{
    let mesh = space.mesh();
    let tab = Tabulation::for_space(space, quad_degree);
    let n = space.n_local() * space.components();
    let mut m = SparseMatrix::zeros(&pattern(space));
    let mut dofs = Vec::new();
    let nc = mesh.n_cells();
    for start in (0..nc).step_by(CHUNK) {
        let end = (start + CHUNK).min(nc);
        let locals: Vec<Result<Vec<f64>, FemError>> = (start..end)
            .into_par_iter()
            .map_init(
                || CellValues::new(&tab, space.spatial_dim(), time),
                |cv, c| {
                    cv.reinit(&tab, mesh, c);
                    let mut a = vec![0.0; n * n];
                    local(cv, &mut a)?;
                    Ok(a)
                },
            )
            .collect();
        for (k, a) in locals.into_iter().enumerate() {
            let a = a?;
            space.cell_dofs_into(start + k, &mut dofs);
            for i in 0..n {
                for j in 0..n {
                    m.add_at(dofs[i], dofs[j], a[i * n + j]);
                }
            }
        }
    }
    if m.values().iter().any(|v| !v.is_finite()) {
        return Err(FemError::NonFinite);
    }
    Ok(m)
}

/// Assembles a vector from per-cell local vectors.
pub fn assemble_vector_with<F>(
    space: &FESpace,
    quad_degree: usize,
    time: f64,
    local: F,
) -> Result<Vec<f64>, FemError>
where
    F: Fn(&CellValues, &mut [f64]) -> Result<(), FemError> + Sync,
{
    let mesh = space.mesh();
    let tab = Tabulation::for_space(space, quad_degree);
    let n = space.n_local() * space.components();
    let mut out = vec![0.0; space.n_dofs()];
    let mut dofs = Vec::new();
    let nc = mesh.n_cells();
    for start in (0..nc).step_by(CHUNK) {
        let end = (start + CHUNK).min(nc);
        let locals: Vec<Result<Vec<f64>, FemError>> = (start..end)
            .into_par_iter()
            .map_init(
                || CellValues::new(&tab, space.spatial_dim(), time),
                |cv, c| {
                    cv.reinit(&tab, mesh, c);
                    let mut b = vec![0.0; n];
                    local(cv, &mut b)?;
                    Ok(b)
                },
            )
            .collect();
        for (k, b) in locals.into_iter().enumerate() {
            let b = b?;
            space.cell_dofs_into(start + k, &mut dofs);
            for i in 0..n {
                out[dofs[i]] += b[i];
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(FemError::NonFinite);
    }
    Ok(out)
}

fn mirror(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
}

/// `(A grad_x phi_j, grad_x phi_i)` on a scalar space.
pub fn assemble_stiffness(
    space: &FESpace,
    a: &MatrixCoef,
    t: f64,
) -> Result<SparseMatrix, FemError> {
    if space.family() != Family::Scalar {
        return Err(FemError::NotScalar);
    }
    let sd = space.spatial_dim();
    assert_eq!(a.dim(), sd);
    if let Some(m) = a.as_constant() {
        if !is_spd(&m, sd) {
            return Err(FemError::NotSpd { cell: 0 });
        }
    }
    let nl = space.n_local();
    assemble_matrix_with(space, space.quad_degree(), t, |cv, loc| {
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let m = a.eval(x, tq)?;
            if a.as_constant().is_none() && !is_spd(&m, sd) {
                return Err(FemError::NotSpd { cell: cv.cell });
            }
            let w = cv.jxw(q);
            for j in 0..nl {
                let gj = cv.grad(q, j);
                let mut agj = [0.0; 3];
                for k in 0..sd {
                    agj[k] = (0..sd).map(|l| m[k][l] * gj[l]).sum();
                }
                for i in 0..=j {
                    let gi = cv.grad(q, i);
                    let s: f64 = (0..sd).map(|k| agj[k] * gi[k]).sum();
                    loc[i * nl + j] += w * s;
                }
            }
        }
        mirror(loc, nl);
        Ok(())
    })
}

/// `(w phi_j, phi_i)`; block diagonal on vector spaces.
pub fn assemble_mass(
    space: &FESpace,
    weight: &ScalarCoef,
    t: f64,
) -> Result<SparseMatrix, FemError> {
    let nl = space.n_local();
    let m = space.components();
    let n = nl * m;
    assemble_matrix_with(space, space.quad_degree(), t, |cv, loc| {
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let w = cv.jxw(q) * weight.eval(x, tq)?;
            for i in 0..nl {
                for j in 0..=i {
                    let v = w * cv.phi(q, i) * cv.phi(q, j);
                    for comp in 0..m {
                        loc[(comp * nl + i) * n + comp * nl + j] += v;
                    }
                }
            }
        }
        for comp in 0..m {
            for i in 0..nl {
                for j in 0..i {
                    loc[(comp * nl + j) * n + comp * nl + i] =
                        loc[(comp * nl + i) * n + comp * nl + j];
                }
            }
        }
        Ok(())
    })
}

/// Row sums of the unit-weight mass matrix.
pub fn lumped_mass(space: &FESpace) -> Result<Vec<f64>, FemError> {
    let nl = space.n_local();
    let m = space.components();
    assemble_vector_with(space, space.quad_degree(), 0.0, |cv, loc| {
        for q in 0..cv.n_q {
            for i in 0..nl {
                let v = cv.jxw(q) * cv.phi(q, i);
                for comp in 0..m {
                    loc[comp * nl + i] += v;
                }
            }
        }
        Ok(())
    })
}

/// `(b . grad_x phi_j, phi_i)` on a scalar space.
pub fn assemble_convection(
    space: &FESpace,
    b: &VectorCoef,
    t: f64,
) -> Result<SparseMatrix, FemError> {
    if space.family() != Family::Scalar {
        return Err(FemError::NotScalar);
    }
    let nl = space.n_local();
    let sd = space.spatial_dim();
    assemble_matrix_with(space, space.quad_degree(), t, |cv, loc| {
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let bv = b.eval(x, tq)?;
            let w = cv.jxw(q);
            for j in 0..nl {
                let gj = cv.grad(q, j);
                let bg: f64 = (0..sd).map(|k| bv[k] * gj[k]).sum();
                for i in 0..nl {
                    loc[i * nl + j] += w * bg * cv.phi(q, i);
                }
            }
        }
        Ok(())
    })
}

/// `(div_x phi_i, div_x phi_j)` on a vector space.
pub fn assemble_div_div(space: &FESpace) -> Result<SparseMatrix, FemError> {
    if space.family() != Family::Vector {
        return Err(FemError::NotVector);
    }
    let nl = space.n_local();
    let m = space.components();
    let n = nl * m;
    assemble_matrix_with(space, space.quad_degree(), 0.0, |cv, loc| {
        for q in 0..cv.n_q {
            let w = cv.jxw(q);
            for a in 0..n {
                let da = cv.grad(q, a % nl)[a / nl];
                for b in 0..=a {
                    let db = cv.grad(q, b % nl)[b / nl];
                    loc[b * n + a] += w * da * db;
                }
            }
        }
        mirror(loc, n);
        Ok(())
    })
}

/// `(A^{-1} phi_j, phi_i)` on a vector space.
pub fn assemble_vector_mass(
    space: &FESpace,
    a: &MatrixCoef,
    t: f64,
) -> Result<SparseMatrix, FemError> {
    if space.family() != Family::Vector {
        return Err(FemError::NotVector);
    }
    let nl = space.n_local();
    let m = space.components();
    let n = nl * m;
    let constant_inv = match a.as_constant() {
        Some(mat) => Some(inverse(&mat, m).ok_or(FemError::Singular { cell: 0 })?),
        None => None,
    };
    assemble_matrix_with(space, space.quad_degree(), t, |cv, loc| {
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let inv = match constant_inv {
                Some(inv) => inv,
                None => inverse(&a.eval(x, tq)?, m).ok_or(FemError::Singular { cell: cv.cell })?,
            };
            let w = cv.jxw(q);
            for ia in 0..n {
                let (ca, i) = (ia / nl, ia % nl);
                let pi = cv.phi(q, i);
                for jb in 0..=ia {
                    let (cb, j) = (jb / nl, jb % nl);
                    loc[jb * n + ia] += w * 0.5 * (inv[ca][cb] + inv[cb][ca]) * pi * cv.phi(q, j);
                }
            }
        }
        mirror(loc, n);
        Ok(())
    })
}

/// `(f, phi_i)` on a scalar space.
pub fn assemble_load(space: &FESpace, f: &ScalarCoef, t: f64) -> Result<Vec<f64>, FemError> {
    let nl = space.n_local();
    assemble_vector_with(space, space.quad_degree(), t, |cv, loc| {
        for q in 0..cv.n_q {
            let (x, tq) = cv.xt(q);
            let w = cv.jxw(q) * f.eval(x, tq)?;
            for i in 0..nl {
                loc[i] += w * cv.phi(q, i);
            }
        }
        Ok(())
    })
}

/// `(s, div_x phi_j)` on a vector space, with `s` supplied per quadrature
/// point of each cell by `src(cell_values, out)`.
pub fn assemble_div_source<F>(
    space: &FESpace,
    quad_degree: usize,
    time: f64,
    src: F,
) -> Result<Vec<f64>, FemError>
where
    F: Fn(&CellValues, &mut [f64]) -> Result<(), FemError> + Sync,
{
    if space.family() != Family::Vector {
        return Err(FemError::NotVector);
    }
    let nl = space.n_local();
    let n = nl * space.components();
    assemble_vector_with(space, quad_degree, time, |cv, loc| {
        let mut s = vec![0.0; cv.n_q];
        src(cv, &mut s)?;
        for q in 0..cv.n_q {
            let w = cv.jxw(q) * s[q];
            for a in 0..n {
                loc[a] += w * cv.grad(q, a % nl)[a / nl];
            }
        }
        Ok(())
    })
}

/// `(s, phi_j)` on a vector space, `s` supplied per quadrature point as
/// `out[q * components + comp]`.
pub fn assemble_vector_source<F>(
    space: &FESpace,
    quad_degree: usize,
    time: f64,
    src: F,
) -> Result<Vec<f64>, FemError>
where
    F: Fn(&CellValues, &mut [f64]) -> Result<(), FemError> + Sync,
{
    let nl = space.n_local();
    let m = space.components();
    assemble_vector_with(space, quad_degree, time, |cv, loc| {
        let mut s = vec![0.0; cv.n_q * m];
        src(cv, &mut s)?;
        for q in 0..cv.n_q {
            for comp in 0..m {
                let w = cv.jxw(q) * s[q * m + comp];
                for i in 0..nl {
                    loc[comp * nl + i] += w * cv.phi(q, i);
                }
            }
        }
        Ok(())
    })
}

/// Number of Gauss points used for time integrals over one slab.
pub const TIME_GAUSS_POINTS: usize = 4;

/// `int_{t_k}^{t_k + tau} f(x, t) (t - t_k) dt` by 4-point Gauss.
pub fn time_moment(f: &ScalarCoef, x: &[f64], t_k: f64, tau: f64) -> Result<f64, FemError> {
    let mut s = 0.0;
    for (t, w) in gauss_interval(TIME_GAUSS_POINTS, t_k, t_k + tau) {
        s += w * f.eval(x, t)? * (t - t_k);
    }
    Ok(s)
}

/// Time moment of `f` at every vertex of the mesh.
pub fn time_moment_f(
    f: &ScalarCoef,
    mesh: &SimplicialMesh,
    t_k: f64,
    tau: f64,
) -> Result<Vec<f64>, FemError> {
    (0..mesh.n_vertices())
        .map(|v| time_moment(f, mesh.vertex(v), t_k, tau))
        .collect()
}

fn same_mesh(a: &FESpace, b: &FESpace) -> Result<(), FemError> {
    if Arc::ptr_eq(a.mesh(), b.mesh()) || **a.mesh() == **b.mesh() {
        Ok(())
    } else {
        Err(FemError::MeshMismatch)
    }
}

/// `z_j = (F + (v_k - v_k1) tau / 2, div phi_j)` with the time moment `F`
/// of `f` evaluated at the quadrature points.
pub fn assemble_z(
    flux_space: &FESpace,
    f: &ScalarCoef,
    v_k: &DiscreteField,
    v_k1: &DiscreteField,
    t_k: f64,
    tau: f64,
) -> Result<Vec<f64>, FemError> {
    same_mesh(flux_space, v_k.space())?;
    same_mesh(flux_space, v_k1.space())?;
    let deg = flux_space.quad_degree().max(v_k.space().quad_degree());
    let rule = Quadrature::simplex(flux_space.mesh().dim(), deg);
    assemble_div_source(flux_space, deg, t_k, |cv, out| {
        let (mut a, mut b, mut g) = (Vec::new(), Vec::new(), Vec::new());
        v_k.eval_bary(cv.cell, &rule.points, &mut a, &mut g);
        v_k1.eval_bary(cv.cell, &rule.points, &mut b, &mut g);
        for q in 0..cv.n_q {
            let (x, _) = cv.xt(q);
            out[q] = time_moment(f, x, t_k, tau)? + (a[q] - b[q]) * tau / 2.0;
        }
        Ok(())
    })
}

/// `g_j = (grad v_k1 + grad v_k / 2, phi_j)`.
pub fn assemble_g(
    flux_space: &FESpace,
    v_k: &DiscreteField,
    v_k1: &DiscreteField,
) -> Result<Vec<f64>, FemError> {
    same_mesh(flux_space, v_k.space())?;
    same_mesh(flux_space, v_k1.space())?;
    let deg = flux_space.quad_degree().max(v_k.space().quad_degree());
    let rule = Quadrature::simplex(flux_space.mesh().dim(), deg);
    let m = flux_space.components();
    let d = flux_space.mesh().dim();
    assemble_vector_source(flux_space, deg, 0.0, |cv, out| {
        let (mut val, mut ga, mut gb) = (Vec::new(), Vec::new(), Vec::new());
        v_k.eval_bary(cv.cell, &rule.points, &mut val, &mut ga);
        v_k1.eval_bary(cv.cell, &rule.points, &mut val, &mut gb);
        for q in 0..cv.n_q {
            for comp in 0..m {
                out[q * m + comp] = gb[q * d + comp] + 0.5 * ga[q * d + comp];
            }
        }
        Ok(())
    })
}
