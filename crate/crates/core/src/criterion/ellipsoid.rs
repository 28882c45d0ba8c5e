use nalgebra::{DMatrix, DVector};

use super::chi2::chi2_quantile;
use super::Criterion;
use crate::error::{Error, Result};

/// Wald ellipsoid `(theta - center)' P (theta - center) < threshold`.
#[derive(Clone, Debug)]
pub struct EllipsoidCriterion {
    center: DVector<f64>,
    precision: DMatrix<f64>,
    threshold: f64,
}

impl EllipsoidCriterion {
    pub fn new(center: Vec<f64>, precision: DMatrix<f64>, threshold: f64) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(Error::invalid("ellipsoid center must be nonempty"));
        }
        if precision.shape() != (d, d) {
            return Err(Error::invalid(format!(
                "precision is {:?}, expected {d}x{d}",
                precision.shape()
            )));
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
        }
        let scale = precision.abs().max();
        if (&precision - precision.transpose()).abs().max() > 1e-10 * scale {
            return Err(Error::NumericalConditioning("precision matrix is not symmetric".into()));
        }
        if precision.clone().cholesky().is_none() {
            return Err(Error::NumericalConditioning(
                "precision matrix is not positive definite".into(),
            ));
        }
        Ok(EllipsoidCriterion { center: DVector::from_vec(center), precision, threshold })
    }

    /// Confidence ellipsoid for an estimate with covariance `cov`: the
    /// threshold is the `level` quantile of chi-square with `d` degrees of
    /// freedom.
    pub fn from_covariance(center: Vec<f64>, cov: &DMatrix<f64>, level: f64) -> Result<Self> {
        let d = center.len();
        let chol = cov.clone().cholesky().ok_or_else(|| {
            Error::NumericalConditioning("covariance is not positive definite".into())
        })?;
        let mut precision = chol.inverse();
        // symmetrize away round-off from the inverse
        precision = (&precision + precision.transpose()) * 0.5;
        EllipsoidCriterion::new(center, precision, chi2_quantile(d as u32, level)?)
    }

    /// Open Euclidean ball.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        let d = center.len();
        EllipsoidCriterion::new(center, DMatrix::identity(d, d) / (radius * radius), 1.0)
    }

    pub fn center(&self) -> &[f64] {
        self.center.as_slice()
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        EllipsoidCriterion::new(self.center.as_slice().to_vec(), self.precision.clone(), threshold)
    }
}

impl Criterion for EllipsoidCriterion {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn statistic(&self, theta: &[f64]) -> Result<f64> {
        let d = self.center.len();
        let mut diff = [0.0; 16];
        let mut heap;
        let diff: &mut [f64] = if d <= 16 {
            &mut diff[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        for i in 0..d {
            diff[i] = theta[i] - self.center[i];
        }
        let mut q = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.precision[(i, j)] * diff[j];
            }
            q += diff[i] * row;
        }
        Ok(q)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}
