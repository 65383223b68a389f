//! Gauss rules on intervals and collapsed (Duffy) Gauss rules on simplices.

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss-Legendre nodes (ascending) and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.5], vec![1.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        // z runs from +1 down to -1, so the mapped nodes ascend
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `n`-point Gauss rule on `[a, b]` as `(point, weight)` pairs.
pub fn gauss_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(x, w)| (a + (b - a) * x, (b - a) * w))
        .collect()
}

/// Quadrature on the reference simplex of dimension `dim`, points given in
/// barycentric coordinates (`dim + 1` entries, padded to 4).
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Rule exact for polynomials of total degree `degree`. Weights sum to
    /// the reference measure `1/dim!`.
    pub fn simplex(dim: usize, degree: usize) -> Quadrature {
        let n = ((degree + dim.max(1)) / 2 + 1).max(1);
        let (gx, gw) = gauss_legendre(n);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            0 => {
                points.push([1.0, 0.0, 0.0, 0.0]);
                weights.push(1.0);
            }
            1 => {
                for (x, w) in gx.iter().zip(&gw) {
                    points.push([1.0 - x, *x, 0.0, 0.0]);
                    weights.push(*w);
                }
            }
            2 => {
                for (u, wu) in gx.iter().zip(&gw) {
                    for (v, wv) in gx.iter().zip(&gw) {
                        let (x1, x2) = (*u, v * (1.0 - u));
                        points.push([1.0 - x1 - x2, x1, x2, 0.0]);
                        weights.push(wu * wv * (1.0 - u));
                    }
                }
            }
            3 => {
                for (u, wu) in gx.iter().zip(&gw) {
                    for (v, wv) in gx.iter().zip(&gw) {
                        for (w, ww) in gx.iter().zip(&gw) {
                            let x1 = *u;
                            let x2 = v * (1.0 - u);
                            let x3 = w * (1.0 - u) * (1.0 - v);
                            points.push([1.0 - x1 - x2 - x3, x1, x2, x3]);
                            weights.push(wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v));
                        }
                    }
                }
            }
            _ => panic!("unsupported simplex dimension {dim}"),
        }
        Quadrature {
            dim,
            degree,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
