//! Compressed sparse row matrices and the iterative solvers used throughout:
//! conjugate gradients with an incomplete Cholesky preconditioner for the
//! symmetric positive definite systems, BiCGSTAB for the (non-symmetric) stabilised space-time
//! system, a dense LU fallback for small problems and a sparse LDL^T
//! fallback for symmetric systems on which CG stalls.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Systems up to this size fall back to a dense LU solve when the
/// iterative method fails.
pub const DENSE_FALLBACK_MAX: usize = 500;

const STALL_WINDOW: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("iterative solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solver breakdown after {iterations} iterations (relative residual {residual:.3e})")]
    Breakdown { iterations: usize, residual: f64 },
    #[error("singular matrix")]
    Singular,
    #[error("dimension mismatch: matrix is {rows}x{cols}, vector has length {len}")]
    Dimension {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("non-finite value in system")]
    NonFinite,
}

/// Sparsity pattern shared by matrices assembled on the same pair of spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Pattern coupling every pair of DOFs that share an element.
    pub fn from_element_dofs<'a, I>(n_rows: usize, n_cols: usize, elements: I) -> Pattern
    where
        I: IntoIterator<Item = (&'a [usize], &'a [usize])>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
        for (rdofs, cdofs) in elements {
            for &r in rdofs {
                rows[r].extend_from_slice(cdofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        Pattern {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
        }
    }

    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: &Pattern) -> SparseMatrix {
        SparseMatrix {
            n_rows: pattern.n_rows,
            n_cols: pattern.n_cols,
            row_ptr: pattern.row_ptr.clone(),
            col_idx: pattern.col_idx.clone(),
            values: vec![0.0; pattern.col_idx.len()],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> SparseMatrix {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseMatrix::from_triplets(n, n, &t)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseMatrix::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Adds `v` at `(i, j)`; the entry must be part of the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let k = self.col_idx[r.clone()]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[r.start + k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        let kernel = |(i, yi): (usize, &mut f64)| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        };
        if self.n_rows > 4096 {
            y.par_iter_mut().enumerate().for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn scaled(&self, a: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= a);
        m
    }

    /// `a * self + b * other`, patterns merged.
    pub fn lin_comb(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        if self.row_ptr == other.row_ptr && self.col_idx == other.col_idx {
            let mut m = self.clone();
            for (v, w) in m.values.iter_mut().zip(&other.values) {
                *v = a * *v + b * w;
            }
            return m;
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            t.extend(self.row(i).map(|(j, v)| (i, j, a * v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, b * v)));
        }
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, &t)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            t.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        SparseMatrix::from_triplets(self.n_cols, self.n_rows, &t)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Sub-matrix with the given rows and columns (both index lists sorted).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut t = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                let cj = col_map[j];
                if cj != usize::MAX {
                    t.push((ri, cj, v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols.len(), &t)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_system(m: &SparseMatrix, rhs: &[f64]) -> Result<(), SolveError> {
    if m.n_rows != m.n_cols || rhs.len() != m.n_rows {
        return Err(SolveError::Dimension {
            rows: m.n_rows,
            cols: m.n_cols,
            len: rhs.len(),
        });
    }
    if rhs.iter().chain(&m.values).any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    Ok(())
}

fn jacobi(m: &SparseMatrix) -> Vec<f64> {
    m.diagonal()
        .into_iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// Zero fill-in incomplete Cholesky factor `L` with `L L^T ~ M`, stored by
/// rows with the diagonal last in each row.
struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    /// Factors `M + shift diag(M)`; `None` on a non-positive pivot.
    fn factor(m: &SparseMatrix, shift: f64) -> Option<IncompleteCholesky> {
        let n = m.n_rows;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let mut has_diag = false;
            for (j, v) in m.row(i) {
                if j < i {
                    col_idx.push(j);
                    values.push(v);
                } else if j == i {
                    col_idx.push(j);
                    values.push(v * (1.0 + shift));
                    has_diag = true;
                }
            }
            if !has_diag {
                return None;
            }
            row_ptr.push(col_idx.len());
        }
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                let k = col_idx[p];
                // sum over j < k of L[i][j] L[k][j]
                let (mut a, mut b) = (start, row_ptr[k]);
                let b_end = row_ptr[k + 1] - 1;
                let mut s = 0.0;
                while a < p && b < b_end {
                    match col_idx[a].cmp(&col_idx[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            s += values[a] * values[b];
                            a += 1;
                            b += 1;
                        }
                    }
                }
                if k < i {
                    values[p] = (values[p] - s) / values[row_ptr[k + 1] - 1];
                } else {
                    let d = values[p] - s;
                    if !(d > 0.0 && d.is_finite()) {
                        return None;
                    }
                    values[p] = d.sqrt();
                }
            }
        }
        Some(IncompleteCholesky {
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `z = (L L^T)^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1] - 1);
            let mut s = r[i];
            for p in start..end {
                s -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = s / self.values[end];
        }
        for i in (0..n).rev() {
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1] - 1);
            z[i] /= self.values[end];
            let zi = z[i];
            for p in start..end {
                z[self.col_idx[p]] -= self.values[p] * zi;
            }
        }
    }
}

enum Preconditioner {
    Jacobi(Vec<f64>),
    Cholesky(IncompleteCholesky),
}

impl Preconditioner {
    /// Incomplete Cholesky when it exists with at most a small diagonal
    /// shift, Jacobi otherwise. Flux systems with a dominant div-div part
    /// need large shifts, and then the factor no longer pays for itself.
    fn for_matrix(m: &SparseMatrix) -> Preconditioner {
        for shift in [0.0, 1e-2] {
            if let Some(ic) = IncompleteCholesky::factor(m, shift) {
                return Preconditioner::Cholesky(ic);
            }
        }
        Preconditioner::Jacobi(jacobi(m))
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(d) => {
                for i in 0..r.len() {
                    z[i] = r[i] * d[i];
                }
            }
            Preconditioner::Cholesky(ic) => ic.apply(r, z),
        }
    }
}

/// Solves `M x = rhs` for symmetric positive definite `M` with
/// preconditioned conjugate gradients, `||M x - rhs|| <= tol ||rhs||`.
pub fn solve_spd(m: &SparseMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>, SolveError> {
    solve_spd_from(m, rhs, None, tol)
}

/// As [`solve_spd`], starting from an initial guess.
pub fn solve_spd_from(
    m: &SparseMatrix,
    rhs: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
) -> Result<Vec<f64>, SolveError> {
    check_system(m, rhs)?;
    match pcg(m, rhs, guess, tol, 10 * m.n_rows.max(10)) {
        Ok(x) => Ok(x),
        Err(e) if m.n_rows <= DENSE_FALLBACK_MAX => {
            log::debug!("CG failed ({e}), using dense fallback");
            solve_dense(m, rhs)
        }
        Err(e) => {
            log::debug!("CG failed ({e}), using sparse LDL^T");
            let x = solve_ldl(m, rhs)?;
            let r = m.mul_vec(&x);
            let res = norm(&rhs.iter().zip(&r).map(|(b, a)| b - a).collect::<Vec<_>>()) / norm(rhs);
            if res <= tol.max(1e-10) {
                Ok(x)
            } else {
                Err(e)
            }
        }
    }
}

/// Direct solve of a symmetric system by `L D L^T` in reverse Cuthill-McKee
/// order, without pivoting.
pub fn solve_ldl(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    check_system(m, rhs)?;
    let n = m.n_rows;
    let a = sprs::CsMat::try_new(
        (n, n),
        m.row_ptr.clone(),
        m.col_idx.clone(),
        m.values.clone(),
    )
    .map_err(|_| SolveError::Singular)?;
    let ldl = sprs_ldl::Ldl::new()
        .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
        .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
        .numeric(a.view())
        .map_err(|_| SolveError::Singular)?;
    let x: Vec<f64> = ldl.solve(rhs.to_vec());
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(SolveError::Singular)
    }
}

fn pcg(
    m: &SparseMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolveError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = b.to_vec();
    if guess.is_some() {
        let ax = m.mul_vec(&x);
        for i in 0..n {
            r[i] -= ax[i];
        }
    }
    let mut res = norm(&r) / bnorm;
    if res <= tol {
        return Ok(x);
    }
    let precond = Preconditioner::for_matrix(m);
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut checkpoint = res;
    for it in 1..=max_iter {
        if it % STALL_WINDOW == 0 {
            // less than a halving over a whole window: hand over to a direct method
            if res > 0.5 * checkpoint {
                return Err(SolveError::NotConverged {
                    iterations: it,
                    residual: res,
                });
            }
            checkpoint = res;
        }
        m.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::Breakdown {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / bnorm;
        if res <= tol {
            // guard against drift of the recursive residual
            let ax = m.mul_vec(&x);
            let true_res = b
                .iter()
                .zip(&ax)
                .map(|(bi, ai)| (bi - ai).powi(2))
                .sum::<f64>()
                .sqrt()
                / bnorm;
            if true_res <= tol * 10.0 {
                return Ok(x);
            }
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NotConverged {
        iterations: max_iter,
        residual: res,
    })
}

/// Solves a general (non-symmetric) system with Jacobi-preconditioned BiCGSTAB.
pub fn solve_general(m: &SparseMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>, SolveError> {
    check_system(m, rhs)?;
    match bicgstab(m, rhs, tol, 10 * m.n_rows.max(10)) {
        Ok(x) => Ok(x),
        Err(e) if m.n_rows <= DENSE_FALLBACK_MAX => {
            log::debug!("BiCGSTAB failed ({e}), using dense fallback");
            solve_dense(m, rhs)
        }
        Err(e) => Err(e),
    }
}

fn bicgstab(
    m: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, SolveError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag = jacobi(m);
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut res = 1.0;
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return Err(SolveError::Breakdown {
                iterations: it,
                residual: res,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        m.mul_vec_into(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(x);
        }
        let s_hat = precond(&s);
        let t = m.mul_vec(&s_hat);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(SolveError::Breakdown {
                iterations: it,
                residual: res,
            });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bnorm;
        if !res.is_finite() {
            return Err(SolveError::Breakdown {
                iterations: it,
                residual: res,
            });
        }
        if res <= tol {
            return Ok(x);
        }
    }
    Err(SolveError::NotConverged {
        iterations: max_iter,
        residual: res,
    })
}

/// Dense LU solve; intended for small systems and test oracles.
pub fn solve_dense(m: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    check_system(m, rhs)?;
    let lu = m.to_dense().lu();
    lu.solve(&DVector::from_column_slice(rhs))
        .map(|x| x.as_slice().to_vec())
        .ok_or(SolveError::Singular)
}

/// Solves `M x = rhs` with `x[i] = value` prescribed for the listed DOFs,
/// by eliminating them and moving their columns to the right-hand side.
pub fn solve_constrained(
    m: &SparseMatrix,
    rhs: &[f64],
    fixed: &[(usize, f64)],
    symmetric: bool,
    tol: f64,
) -> Result<Vec<f64>, SolveError> {
    check_system(m, rhs)?;
    let n = m.n_rows;
    let mut x = vec![0.0; n];
    let mut is_fixed = vec![false; n];
    for &(i, v) in fixed {
        is_fixed[i] = true;
        x[i] = v;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    if free.is_empty() {
        return Ok(x);
    }
    let ax = m.mul_vec(&x);
    let reduced_rhs: Vec<f64> = free.iter().map(|&i| rhs[i] - ax[i]).collect();
    let reduced = m.submatrix(&free, &free);
    let xf = if symmetric {
        solve_spd(&reduced, &reduced_rhs, tol)?
    } else {
        solve_general(&reduced, &reduced_rhs, tol)?
    };
    for (k, &i) in free.iter().enumerate() {
        x[i] = xf[k];
    }
    Ok(x)
}
