use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Least-squares coefficients with their estimated covariance
/// `s^2 (X'X)^{-1}`, `s^2 = RSS / (n - k)`.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub beta: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_variance: f64,
}

pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::invalid(format!("y has length {}, design has {n} rows", y.len())));
    }
    if n <= k {
        return Err(Error::SingularDesign(format!("{n} rows for {k} columns")));
    }
    let xtx = x.transpose() * x;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("X'X is not positive definite".into()))?;
    // reject numerically rank-deficient designs that Cholesky lets through
    let diag = chol.l().diagonal();
    let (dmin, dmax) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    if dmin <= 1e-10 * dmax {
        return Err(Error::SingularDesign("design columns are collinear".into()));
    }
    let beta = chol.solve(&(x.transpose() * y));
    let resid = y - x * &beta;
    let residual_variance = resid.norm_squared() / (n - k) as f64;
    let covariance = chol.inverse() * residual_variance;
    Ok(OlsFit { beta, covariance, residual_variance })
}

/// Draws `n` rows of an intercept plus `beta.len() - 1` standard normal
/// covariates, and `y = X beta + e` with standard normal errors.
pub fn simulate_linear_model(n: usize, beta: &[f64], seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let k = beta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, k, |_, j| if j == 0 { 1.0 } else { StandardNormal.sample(&mut rng) });
    let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let y = &x * DVector::from_row_slice(beta) + noise;
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_without_noise() {
        let beta0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let (x, _) = simulate_linear_model(50, beta0.as_slice(), 1);
        let y = &x * &beta0;
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.beta - beta0).abs().max() < 1e-12);
        assert!(fit.residual_variance < 1e-20);
    }

    #[test]
    fn orthonormal_single_column() {
        let x = DMatrix::from_column_slice(4, 1, &[0.5, 0.5, 0.5, 0.5]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let fit = ols_fit(&x, &y).unwrap();
        assert!((fit.beta[0] - (x.transpose() * &y)[0]).abs() < 1e-12);
    }

    #[test]
    fn collinear_design_rejected() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(ols_fit(&x, &y), Err(Error::SingularDesign(_))));
    }
}
