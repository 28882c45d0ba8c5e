//! Membership tests that label parameter points as inside (+1) or outside
//! (-1) a confidence set.
//!
//! Every criterion reduces to a statistic and a threshold; a point is inside
//! exactly when the statistic is strictly below the threshold, so ties land
//! outside.

mod chi2;
mod ellipsoid;
mod moment;
mod nnls;
mod ols;
mod synthetic;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use chi2::{chi2_quantile, critical_value};
pub use ellipsoid::EllipsoidCriterion;
pub use moment::{
    interval_regression, qhat, simulate_interval_data, MomentCriterion, MomentEstimate,
    MomentModel, SampleMoments,
};
pub use nnls::{nnls, NnlsSolution};
pub use ols::{ols_fit, simulate_linear_model, OlsFit};
pub use synthetic::{Shape, SyntheticCriterion, SyntheticRegion};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Binary class of a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Inside,
    Outside,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Inside => 1.0,
            Label::Outside => -1.0,
        }
    }

    /// `+1` for strictly positive values, `-1` otherwise (including zero).
    pub fn from_sign(v: f64) -> Label {
        if v > 0.0 {
            Label::Inside
        } else {
            Label::Outside
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Inside => Label::Outside,
            Label::Outside => Label::Inside,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Inside => 1,
            Label::Outside => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Label> {
        match v {
            1 => Ok(Label::Inside),
            -1 => Ok(Label::Outside),
            other => Err(Error::Format(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Inside => "+1",
            Label::Outside => "-1",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Label> {
        match s.trim() {
            "1" | "+1" => Ok(Label::Inside),
            "-1" => Ok(Label::Outside),
            other => Err(Error::Format(format!("label must be +1 or -1, got {other:?}"))),
        }
    }
}

/// A grid with one label per point, the classifier's training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledGrid {
    grid: Grid,
    labels: Vec<Label>,
}

impl LabeledGrid {
    pub fn new(grid: Grid, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != grid.count() {
            return Err(Error::invalid(format!(
                "{} labels for {} grid points",
                labels.len(),
                grid.count()
            )));
        }
        Ok(LabeledGrid { grid, labels })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.grid.points().row(i)
    }

    /// l1: number of points labeled +1.
    pub fn inside_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Inside).count()
    }

    /// l0: number of points labeled -1.
    pub fn outside_count(&self) -> usize {
        self.len() - self.inside_count()
    }

    pub fn has_both_classes(&self) -> bool {
        let l1 = self.inside_count();
        l1 > 0 && l1 < self.len()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledGrid {
        LabeledGrid {
            grid: self.grid.subset(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Same points with every label flipped.
    pub fn flipped(&self) -> LabeledGrid {
        LabeledGrid {
            grid: self.grid.clone(),
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
        }
    }

    pub(crate) fn push(&mut self, point: &[f64], label: Label) -> Result<()> {
        self.grid.push_inserted(point)?;
        self.labels.push(label);
        Ok(())
    }

    pub fn into_parts(self) -> (Grid, Vec<Label>) {
        (self.grid, self.labels)
    }
}

/// A statistic/threshold membership test over `dim`-dimensional parameters.
pub trait Criterion: Send + Sync {
    fn dim(&self) -> usize;

    fn statistic(&self, theta: &[f64]) -> Result<f64>;

    fn threshold(&self) -> f64;

    /// `+1` iff the statistic is strictly below the threshold.
    fn label(&self, theta: &[f64]) -> Result<Label> {
        check_dim(self.dim(), theta)?;
        let stat = self.statistic(theta)?;
        Ok(if stat < self.threshold() { Label::Inside } else { Label::Outside })
    }
}

impl<C: Criterion + ?Sized> Criterion for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn statistic(&self, theta: &[f64]) -> Result<f64> {
        (**self).statistic(theta)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
    fn label(&self, theta: &[f64]) -> Result<Label> {
        (**self).label(theta)
    }
}

impl<C: Criterion + ?Sized> Criterion for Box<C> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn statistic(&self, theta: &[f64]) -> Result<f64> {
        (**self).statistic(theta)
    }
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }
    fn label(&self, theta: &[f64]) -> Result<Label> {
        (**self).label(theta)
    }
}

pub(crate) fn check_dim(expected: usize, theta: &[f64]) -> Result<()> {
    if theta.len() != expected {
        return Err(Error::invalid(format!(
            "point has dimension {}, criterion expects {expected}",
            theta.len()
        )));
    }
    Ok(())
}

pub fn label<C: Criterion + ?Sized>(criterion: &C, theta: &[f64]) -> Result<Label> {
    criterion.label(theta)
}

/// Labels every grid point. Evaluation fans out over the rayon pool; output
/// order matches the grid, and on failure the lowest failing index is
/// reported.
pub fn label_grid<C: Criterion + ?Sized>(criterion: &C, grid: &Grid) -> Result<LabeledGrid> {
    if grid.count() == 0 {
        return Err(Error::invalid("cannot label an empty grid"));
    }
    check_dim(criterion.dim(), grid.points().row(0))?;
    let results: Vec<Result<Label>> = (0..grid.count())
        .into_par_iter()
        .map(|i| criterion.label(grid.points().row(i)))
        .collect();
    let mut labels = Vec::with_capacity(results.len());
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(l) => labels.push(l),
            Err(source) => {
                return Err(Error::PointEvaluation { index, source: Box::new(source) })
            }
        }
    }
    LabeledGrid::new(grid.clone(), labels)
}
