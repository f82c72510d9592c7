//! Gauss–Jacobi rules and the collapsed (conical product) tetrahedral rule.

use nalgebra::{DMatrix, SymmetricEigen};

/// `n`-point Gauss rule for `int_0^1 (1 - t)^alpha g(t) dt`, nodes ascending.
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Golub–Welsch on [-1, 1] with weight (1 - x)^alpha (1 + x)^0.
    let (a, b) = (alpha, 0.0_f64);
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jm[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let v = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0));
            jm[(k, k + 1)] = v.sqrt();
            jm[(k + 1, k)] = v.sqrt();
        }
    }
    let mu0 = 2.0_f64.powf(a + 1.0) / (a + 1.0);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = mu0 * eig.eigenvectors[(0, i)].powi(2);
            (0.5 * (x + 1.0), w / 2.0_f64.powf(a + 1.0))
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// Quadrature on a tetrahedron in barycentric coordinates. Weights are
/// fractions of the element volume and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl TetRule {
    /// Conical product rule with `n` points per direction, exact for
    /// polynomials of total degree `2n - 1`.
    pub fn conical(n: usize) -> Self {
        let (xa, wa) = gauss_jacobi(n, 2.0);
        let (xb, wb) = gauss_jacobi(n, 1.0);
        let (xc, wc) = gauss_jacobi(n, 0.0);
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for (a, wa) in xa.iter().zip(&wa) {
            for (b, wb) in xb.iter().zip(&wb) {
                for (c, wc) in xc.iter().zip(&wc) {
                    let l1 = a;
                    let l2 = (1.0 - a) * b;
                    let l3 = (1.0 - a) * (1.0 - b) * c;
                    points.push([1.0 - l1 - l2 - l3, *l1, l2, l3]);
                    weights.push(6.0 * wa * wb * wc);
                }
            }
        }
        Self { points, weights }
    }

    /// Smallest conical rule exact to degree `deg`.
    pub fn with_exactness(deg: usize) -> Self {
        Self::conical(deg / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
