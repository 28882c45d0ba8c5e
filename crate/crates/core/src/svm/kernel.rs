use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::squared_distance;

/// Gaussian kernel `exp(-|u - v|^2 / (2 sigma2))`.
pub fn rbf_kernel(u: &[f64], v: &[f64], sigma2: f64) -> Result<f64> {
    check_sigma2(sigma2)?;
    if u.len() != v.len() {
        return Err(Error::invalid(format!("kernel inputs have dimensions {} and {}", u.len(), v.len())));
    }
    Ok((-squared_distance(u, v) / (2.0 * sigma2)).exp())
}

/// Inhomogeneous polynomial kernel `(u'v + coef0)^degree`.
pub fn polynomial_kernel(u: &[f64], v: &[f64], degree: u32, coef0: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!("kernel inputs have dimensions {} and {}", u.len(), v.len())));
    }
    if degree == 0 {
        return Err(Error::invalid("polynomial degree must be >= 1"));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot + coef0).powi(degree as i32))
}

pub(crate) fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(format!("sigma2 must be positive and finite, got {sigma2}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Rbf { sigma2: f64 },
    Polynomial { degree: u32, coef0: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { sigma2 } => check_sigma2(sigma2),
            Kernel::Polynomial { degree, coef0 } => {
                if degree == 0 || !coef0.is_finite() {
                    return Err(Error::invalid("polynomial kernel needs degree >= 1 and finite coef0"));
                }
                Ok(())
            }
        }
    }

    /// Unchecked evaluation; dimensions and parameters are validated upstream.
    #[inline]
    pub(crate) fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { sigma2 } => (-squared_distance(u, v) / (2.0 * sigma2)).exp(),
            Kernel::Polynomial { degree, coef0 } => {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                (dot + coef0).powi(degree as i32)
            }
        }
    }
}
