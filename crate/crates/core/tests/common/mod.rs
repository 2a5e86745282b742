//! Shared numerical oracles for the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Tensor Gauss–Legendre rule for `∫_{[-l, l]^3} f`.
pub fn integrate_cube3(f: impl Fn([f64; 3]) -> f64, l: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                total += w[i] * w[j] * w[k] * f([l * x[i], l * x[j], l * x[k]]);
            }
        }
    }
    total * l * l * l
}

fn inverse3(m: [[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *v = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    (inv, det)
}

/// Rényi mutual information of a zero-mean trivariate Gaussian with unit
/// variances and correlation matrix `r`, by quadrature of
/// `log ∫ f^α ∏ f_i^{1−α} / (α − 1)`.
pub fn gaussian_mi_quadrature(r: [[f64; 3]; 3], alpha: f64) -> f64 {
    let (inv, det) = inverse3(r);
    let norm = (2.0 * PI).powf(-1.5) / det.sqrt();
    let integral = integrate_cube3(
        |x| {
            let mut q = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    q += x[a] * inv[a][b] * x[b];
                }
            }
            let joint = norm * (-0.5 * q).exp();
            let marg: f64 = x.iter().map(|v| (-0.5 * v * v).exp() / (2.0 * PI).sqrt()).product();
            joint.powf(alpha) * marg.powf(1.0 - alpha)
        },
        9.0,
        64,
    );
    integral.ln() / (alpha - 1.0)
}

/// Pairwise-correlation matrix with off-diagonal `rho`.
pub fn equicorrelation(rho: f64) -> [[f64; 3]; 3] {
    let mut r = [[rho; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    r
}
