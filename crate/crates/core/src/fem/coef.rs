//! Expression-valued coefficients with a constant fast path.

use crate::expr::{ExprError, ExprFn};

#[derive(Debug, Clone)]
pub struct ScalarCoef {
    expr: ExprFn,
    constant: Option<f64>,
}

impl ScalarCoef {
    pub fn new(expr: ExprFn) -> ScalarCoef {
        let constant = expr.as_constant();
        ScalarCoef { expr, constant }
    }

    pub fn constant(v: f64) -> ScalarCoef {
        ScalarCoef::new(ExprFn::constant(v))
    }

    pub fn parse(src: &str) -> Result<ScalarCoef, ExprError> {
        Ok(ScalarCoef::new(ExprFn::parse(src)?))
    }

    pub fn expr(&self) -> &ExprFn {
        &self.expr
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExprError> {
        match self.constant {
            Some(v) => Ok(v),
            None => self.expr.eval(x, t),
        }
    }

    /// Spatial gradient (first `d` components) and time derivative.
    pub fn grad(&self, x: &[f64], t: f64) -> Result<([f64; 3], f64), ExprError> {
        if self.constant.is_some() {
            return Ok(([0.0; 3], 0.0));
        }
        let g = self.expr.eval_grad(x, t)?;
        Ok(([g.grad[0], g.grad[1], g.grad[2]], g.grad[3]))
    }
}

/// Square matrix coefficient of size `dim`, row-major.
#[derive(Debug, Clone)]
pub struct MatrixCoef {
    dim: usize,
    entries: Vec<ScalarCoef>,
    constant: Option<[[f64; 3]; 3]>,
}

impl MatrixCoef {
    pub fn new(dim: usize, entries: Vec<ScalarCoef>) -> MatrixCoef {
        assert_eq!(entries.len(), dim * dim);
        let constant = if entries.iter().all(|e| e.as_constant().is_some()) {
            let mut m = [[0.0; 3]; 3];
            for i in 0..dim {
                for j in 0..dim {
                    m[i][j] = entries[i * dim + j].as_constant().unwrap();
                }
            }
            Some(m)
        } else {
            None
        };
        MatrixCoef {
            dim,
            entries,
            constant,
        }
    }

    pub fn identity(dim: usize) -> MatrixCoef {
        MatrixCoef::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> MatrixCoef {
        let d = diag.len();
        let mut e = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                e.push(ScalarCoef::constant(if i == j { diag[i] } else { 0.0 }));
            }
        }
        MatrixCoef::new(d, e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarCoef {
        &self.entries[i * self.dim + j]
    }

    pub fn as_constant(&self) -> Option<[[f64; 3]; 3]> {
        self.constant
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<[[f64; 3]; 3], ExprError> {
        if let Some(m) = self.constant {
            return Ok(m);
        }
        let mut m = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.entries[i * self.dim + j].eval(x, t)?;
            }
        }
        Ok(m)
    }
}

/// Smallest and largest eigenvalue of the symmetric part of the leading
/// `d x d` block.
pub fn sym_eig_bounds(m: &[[f64; 3]; 3], d: usize) -> (f64, f64) {
    let s = nalgebra::DMatrix::from_fn(d, d, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let ev = s.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// `true` when the leading block is symmetric (to round-off) and has
/// positive leading minors.
pub fn is_spd(m: &[[f64; 3]; 3], d: usize) -> bool {
    let scale = (0..d)
        .map(|i| m[i][i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for i in 0..d {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    (1..=d).all(|k| crate::mesh::det(m, k) > 0.0)
}

#[derive(Debug, Clone)]
pub struct VectorCoef {
    entries: Vec<ScalarCoef>,
}

impl VectorCoef {
    pub fn new(entries: Vec<ScalarCoef>) -> VectorCoef {
        VectorCoef { entries }
    }

    pub fn zero(dim: usize) -> VectorCoef {
        VectorCoef::new((0..dim).map(|_| ScalarCoef::constant(0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn component(&self, i: usize) -> &ScalarCoef {
        &self.entries[i]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<[f64; 3], ExprError> {
        let mut v = [0.0; 3];
        for (i, e) in self.entries.iter().enumerate() {
            v[i] = e.eval(x, t)?;
        }
        Ok(v)
    }

    /// Spatial divergence.
    pub fn div(&self, x: &[f64], t: f64) -> Result<f64, ExprError> {
        let mut s = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            s += e.grad(x, t)?.0[i];
        }
        Ok(s)
    }
}
