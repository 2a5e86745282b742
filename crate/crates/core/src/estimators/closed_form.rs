//! Closed-form Rényi quantities for Gaussian laws, used as ground truth.

use nalgebra::DMatrix;

/// `H_α` of `N(μ, Σ)`: `(d/2) log 2π + (1/2) log|Σ| − (d/2) log α / (1 − α)`.
pub fn gaussian_renyi_entropy(cov: &DMatrix<f64>, alpha: f64) -> f64 {
    let d = cov.nrows() as f64;
    let log_det = cov.clone().symmetric_eigenvalues().iter().map(|l| l.ln()).sum::<f64>();
    0.5 * d * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det - 0.5 * d * alpha.ln() / (1.0 - alpha)
}

/// `I_α` of `N(μ, Σ)` with respect to its one-dimensional marginals.
///
/// Only the correlation matrix `R` matters. With eigenvalues `λ_i` of `R`,
/// `∫ f^α (∏ f_i)^{1−α} = ∏_i λ_i^{−α/2} (α/λ_i + 1 − α)^{−1/2}`.
pub fn gaussian_renyi_mi(cov: &DMatrix<f64>, alpha: f64) -> f64 {
    let d = cov.nrows();
    let corr = DMatrix::from_fn(d, d, |i, j| cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt());
    let log_integral: f64 = corr
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| -0.5 * alpha * l.ln() - 0.5 * (alpha / l + 1.0 - alpha).ln())
        .sum();
    log_integral / (alpha - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_gaussian_has_zero_mi() {
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0, 0.5]));
        assert!(gaussian_renyi_mi(&cov, 0.7).abs() < 1e-14);
    }

    #[test]
    fn mi_grows_with_correlation() {
        let mk = |r: f64| DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
        let a = gaussian_renyi_mi(&mk(0.3), 0.7);
        let b = gaussian_renyi_mi(&mk(0.8), 0.7);
        assert!(0.0 < a && a < b);
        // scale invariance
        let scaled = DMatrix::from_row_slice(2, 2, &[4.0, 0.6, 0.6, 1.0]);
        assert!((gaussian_renyi_mi(&scaled, 0.7) - a).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_entropy() {
        // d = 1: log sqrt(2π) − log α / (2 (1 − α))
        let h = gaussian_renyi_entropy(&DMatrix::identity(1, 1), 0.5);
        let want = 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5f64.ln().abs();
        assert!((h - want).abs() < 1e-12);
    }
}
