use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::criterion::{
    interval_regression, simulate_interval_data, Criterion, EllipsoidCriterion, MomentCriterion,
    SyntheticCriterion, SyntheticRegion,
};
use crate::error::{Error, Result};

/// A criterion described in a config file, e.g.
///
/// ```toml
/// [criterion]
/// type = "ball"
/// center = [0.5, 0.5]
/// radius = 0.3
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CriterionSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Confidence ellipsoid at `level` for an estimate with this covariance.
    Ellipsoid {
        center: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        #[serde(default = "default_level")]
        level: f64,
    },
    /// The two-component region, seen through noise of the given scale or
    /// the scale implied by `n`.
    Synthetic {
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        noise_scale: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    /// Moment inequalities of an interval-censored regression on simulated
    /// data.
    IntervalRegression {
        n: usize,
        beta: Vec<f64>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
}

fn default_level() -> f64 {
    0.95
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CriterionFile {
    criterion: CriterionSpec,
}

impl CriterionSpec {
    /// Reads the `[criterion]` table of a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str::<CriterionFile>(text)
            .map(|f| f.criterion)
            .map_err(|e| Error::invalid(format!("bad criterion config: {e}")))
    }

    pub fn build(&self) -> Result<Box<dyn Criterion>> {
        Ok(match self {
            CriterionSpec::Ball { center, radius } => {
                Box::new(EllipsoidCriterion::ball(center.clone(), *radius)?)
            }
            CriterionSpec::Ellipsoid { center, covariance, level } => {
                let d = center.len();
                if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
                    return Err(Error::invalid(format!("covariance must be {d}x{d}")));
                }
                let cov = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
                Box::new(EllipsoidCriterion::from_covariance(center.clone(), &cov, *level)?)
            }
            CriterionSpec::Synthetic { n, noise_scale, seed } => {
                let region = SyntheticRegion::disc_and_holed_ellipse();
                let noise = match (noise_scale, n) {
                    (Some(s), _) => *s,
                    (None, Some(n)) => SyntheticCriterion::noise_for(&region, (*n).max(1)),
                    (None, None) => 0.0,
                };
                Box::new(SyntheticCriterion::new(region, noise, *seed)?)
            }
            CriterionSpec::IntervalRegression { n, beta, seed, alpha } => {
                let model = interval_regression(simulate_interval_data(*n, beta, *seed)?)?;
                Box::new(MomentCriterion::new(model, *alpha)?)
            }
        })
    }
}
