//! Soft-margin kernel support vector classification.
//!
//! Training solves the dual with SMO; prediction is the sign of
//! `f(x) = sum_i alpha_i y_i K(x_i, x) + b`, with an exact zero read as -1
//! so a classifier is never more permissive than the strict criterion.

mod kernel;
mod smo;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::{polynomial_kernel, rbf_kernel, Kernel};
pub use smo::{solve_dual, DualSolution, SmoOptions};

use crate::criterion::{check_dim, Label, LabeledGrid};
use crate::error::{Error, Result};
use crate::grid::{squared_distance, Hyperbox, Points};

/// RBF bandwidth and soft-margin trade-off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub sigma2: f64,
    pub c: f64,
}

impl KernelParams {
    pub fn new(sigma2: f64, c: f64) -> Result<Self> {
        let p = KernelParams { sigma2, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        kernel::check_sigma2(self.sigma2)?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive and finite, got {}", self.c)));
        }
        Ok(())
    }
}

// below this exponent exp() underflows to exactly zero
const EXP_CUTOFF: f64 = -746.0;

/// Anything that assigns a real score to a point; the label is its sign.
pub trait Predictor: Sync {
    fn dim(&self) -> usize;

    /// Score without dimension checks.
    fn score(&self, theta: &[f64]) -> f64;

    fn predict(&self, theta: &[f64]) -> Result<Label> {
        check_dim(self.dim(), theta)?;
        Ok(Label::from_sign(self.score(theta)))
    }
}

/// Support vectors, dual weights and offset of a trained classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    kernel: Kernel,
    c: f64,
    support: Points,
    alphas: Vec<f64>,
    labels: Vec<Label>,
    coef: Vec<f64>,
    bias: f64,
    bounds: Hyperbox,
    training_size: usize,
}

pub fn train(data: &LabeledGrid, params: KernelParams) -> Result<TrainedClassifier> {
    params.validate()?;
    train_with(data, Kernel::Rbf { sigma2: params.sigma2 }, params.c, &SmoOptions::default())
}

pub fn train_with(
    data: &LabeledGrid,
    kernel: Kernel,
    c: f64,
    opts: &SmoOptions,
) -> Result<TrainedClassifier> {
    let sol = solve_dual(data, kernel, c, opts)?;
    Ok(TrainedClassifier::from_solution(data, kernel, c, &sol))
}

impl TrainedClassifier {
    pub fn from_solution(data: &LabeledGrid, kernel: Kernel, c: f64, sol: &DualSolution) -> Self {
        let idx = &sol.support_indices;
        let labels: Vec<Label> = idx.iter().map(|&i| data.labels()[i]).collect();
        let alphas: Vec<f64> = idx.iter().map(|&i| sol.alphas[i]).collect();
        TrainedClassifier::assemble(
            kernel,
            c,
            data.grid().points().select(idx),
            alphas,
            labels,
            sol.bias,
            data.grid().bounds().clone(),
            data.len(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kernel: Kernel,
        c: f64,
        support: Points,
        alphas: Vec<f64>,
        labels: Vec<Label>,
        bias: f64,
        bounds: Hyperbox,
        training_size: usize,
    ) -> Self {
        let coef = alphas.iter().zip(&labels).map(|(a, l)| a * l.value()).collect();
        TrainedClassifier { kernel, c, support, alphas, labels, coef, bias, bounds, training_size }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn support_vectors(&self) -> &Points {
        &self.support
    }

    pub fn support_count(&self) -> usize {
        self.support.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn support_labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Box of the training grid; predictions outside it are extrapolation.
    pub fn bounds(&self) -> &Hyperbox {
        &self.bounds
    }

    pub fn training_size(&self) -> usize {
        self.training_size
    }

    pub fn decision_value(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim(), theta)?;
        Ok(self.score(theta))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ClassifierFile {
            format: FORMAT.into(),
            version: VERSION,
            kernel: self.kernel,
            c: self.c,
            bias: self.bias,
            bounds: self.bounds.clone(),
            training_size: self.training_size,
            support_vectors: self.support.iter().map(<[f64]>::to_vec).collect(),
            alphas: self.alphas.clone(),
            labels: self.labels.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if probe.get("format").and_then(|v| v.as_str()) != Some(FORMAT) {
            return Err(Error::Format("not a classifier file".into()));
        }
        match probe.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == VERSION as u64 => {}
            other => {
                return Err(Error::Format(format!(
                    "classifier version {other:?} is not supported (expected {VERSION})"
                )))
            }
        }
        let f: ClassifierFile =
            serde_json::from_value(probe).map_err(|e| Error::Format(e.to_string()))?;
        f.kernel.validate()?;
        let n = f.support_vectors.len();
        if f.alphas.len() != n || f.labels.len() != n {
            return Err(Error::Format("support vectors, alphas and labels differ in length".into()));
        }
        let support = if n == 0 {
            Points::new(f.bounds.dim())
        } else {
            Points::from_rows(&f.support_vectors).map_err(|e| Error::Format(e.to_string()))?
        };
        if support.dim() != f.bounds.dim() {
            return Err(Error::Format("support vector dimension does not match bounds".into()));
        }
        Ok(TrainedClassifier::assemble(
            f.kernel,
            f.c,
            support,
            f.alphas,
            f.labels,
            f.bias,
            f.bounds,
            f.training_size,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        TrainedClassifier::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Predictor for TrainedClassifier {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn score(&self, theta: &[f64]) -> f64 {
        let d = self.support.dim();
        let mut f = self.bias;
        match self.kernel {
            Kernel::Rbf { sigma2 } => {
                let gamma = -0.5 / sigma2;
                for (sv, w) in self.support.as_flat().chunks_exact(d).zip(&self.coef) {
                    let e = squared_distance(sv, theta) * gamma;
                    if e > EXP_CUTOFF {
                        f += w * e.exp();
                    }
                }
            }
            k => {
                for (sv, w) in self.support.as_flat().chunks_exact(d).zip(&self.coef) {
                    f += w * k.eval(sv, theta);
                }
            }
        }
        f
    }
}

const FORMAT: &str = "svmcs-classifier";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ClassifierFile {
    format: String,
    version: u32,
    kernel: Kernel,
    c: f64,
    bias: f64,
    bounds: Hyperbox,
    training_size: usize,
    support_vectors: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    labels: Vec<Label>,
}

/// The decision rule with every weight set to one and no offset:
/// `sign(sum_i y_i K(s_i, theta))` over the whole labeled grid.
#[derive(Clone, Copy, Debug)]
pub struct SimplifiedClassifier<'a> {
    data: &'a LabeledGrid,
    sigma2: f64,
}

impl<'a> SimplifiedClassifier<'a> {
    pub fn new(data: &'a LabeledGrid, sigma2: f64) -> Result<Self> {
        kernel::check_sigma2(sigma2)?;
        if data.is_empty() {
            return Err(Error::invalid("simplified decision needs at least one grid point"));
        }
        Ok(SimplifiedClassifier { data, sigma2 })
    }
}

impl Predictor for SimplifiedClassifier<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    /// The sum is rescaled by `exp(min_i |s_i - theta|^2 / (2 sigma2))` so the
    /// nearest term is one and small bandwidths cannot underflow everything
    /// to zero; the sign is unchanged.
    fn score(&self, theta: &[f64]) -> f64 {
        let pts = self.data.grid().points();
        let nearest = pts.iter().map(|s| squared_distance(s, theta)).fold(f64::INFINITY, f64::min);
        let two_s2 = 2.0 * self.sigma2;
        pts.iter()
            .zip(self.data.labels())
            .map(|(s, y)| {
                let e = -(squared_distance(s, theta) - nearest) / two_s2;
                if e > EXP_CUTOFF {
                    y.value() * e.exp()
                } else {
                    0.0
                }
            })
            .sum()
    }
}

pub fn simplified_decision(data: &LabeledGrid, sigma2: f64, theta: &[f64]) -> Result<Label> {
    SimplifiedClassifier::new(data, sigma2)?.predict(theta)
}

/// Labels every point in parallel; output order matches the input.
pub fn batch_predict<P: Predictor + ?Sized>(predictor: &P, points: &Points) -> Result<Vec<Label>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    if points.dim() != predictor.dim() {
        return Err(Error::invalid(format!(
            "points have dimension {}, classifier expects {}",
            points.dim(),
            predictor.dim()
        )));
    }
    let d = points.dim();
    Ok(points
        .as_flat()
        .par_chunks_exact(d)
        .with_min_len(256)
        .map(|p| Label::from_sign(predictor.score(p)))
        .collect())
}
