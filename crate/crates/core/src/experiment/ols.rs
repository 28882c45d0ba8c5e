use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_size_rule, GridSizeRule};
use crate::criterion::{label_grid, ols_fit, simulate_linear_model, EllipsoidCriterion, Label};
use crate::error::{Error, Result};
use crate::grid::{generate, Hyperbox, SequenceKind};
use crate::svm::{batch_predict, train, Predictor};
use crate::tuning::Tuning;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OlsConfig {
    /// Observations per simulated data set.
    pub n: usize,
    /// Number of coefficients, intercept included.
    pub dim: usize,
    /// True coefficients; drawn uniformly from [-1, 1] when absent.
    pub beta0: Option<Vec<f64>>,
    pub grid_size: usize,
    /// When set, overrides `grid_size` with the rule applied to `n`.
    pub rule: Option<GridSizeRule>,
    /// Half the side of the grid box centered at the estimate.
    pub half_width: f64,
    pub level: f64,
    /// Training fractions.
    pub splits: Vec<f64>,
    pub iterations: usize,
    pub tuning: Tuning,
    pub seed: u64,
}

impl Default for OlsConfig {
    fn default() -> Self {
        OlsConfig {
            n: 500,
            dim: 5,
            beta0: None,
            grid_size: 8000,
            rule: None,
            half_width: 0.25,
            level: 0.95,
            splits: vec![0.8, 0.5, 0.2, 0.05],
            iterations: 100,
            tuning: Tuning::Fixed { sigma2: 4e-3, c: 10.0 },
            seed: 1,
        }
    }
}

impl OlsConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("bad OLS config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("<unprintable config: {e}>"))
    }

    pub fn grid_size(&self) -> Result<usize> {
        match self.rule {
            Some(rule) => grid_size_rule(rule, self.n),
            None => Ok(self.grid_size),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.n <= self.dim {
            return Err(Error::invalid("need dim >= 2 and n > dim"));
        }
        if self.grid_size()? < 2 || self.iterations == 0 || self.splits.is_empty() {
            return Err(Error::invalid("grid size >= 2, iterations >= 1 and at least one split are required"));
        }
        if let Some(s) = self.splits.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(Error::invalid(format!("split fractions must lie in (0, 1), got {s}")));
        }
        if !(self.level > 0.0 && self.level < 1.0) || !(self.half_width > 0.0) {
            return Err(Error::invalid("level must lie in (0, 1) and half_width must be positive"));
        }
        if let Some(b) = &self.beta0 {
            if b.len() != self.dim {
                return Err(Error::invalid(format!("beta0 has {} entries, dim is {}", b.len(), self.dim)));
            }
        }
        Ok(())
    }

    pub fn beta0(&self) -> Vec<f64> {
        self.beta0.clone().unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
    }
}

/// Averages for one training fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OlsRow {
    pub split: f64,
    pub training: usize,
    pub test: usize,
    pub test_accuracy: f64,
    pub capture_rate: f64,
    /// Iterations whose training subset held a single class; the classifier
    /// then predicts that class everywhere.
    pub single_class: usize,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsReport {
    pub beta0: Vec<f64>,
    pub grid_size: usize,
    pub threshold: f64,
    pub mean_inside: f64,
    pub rows: Vec<OlsRow>,
}

struct Outcome {
    accuracy: f64,
    captured: bool,
    single_class: bool,
    train_seconds: f64,
    predict_seconds: f64,
}

fn iteration(cfg: &OlsConfig, beta0: &[f64], size: usize, it: usize) -> Result<(usize, Vec<Outcome>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(it as u64 + 1);
    let (data_seed, grid_seed): (u64, u64) = (rng.random(), rng.random());
    let (x, y) = simulate_linear_model(cfg.n, beta0, data_seed);
    let fit = ols_fit(&x, &y)?;
    let center: Vec<f64> = fit.beta.iter().copied().collect();
    let criterion = EllipsoidCriterion::from_covariance(center.clone(), &fit.covariance, cfg.level)?;
    let bounds = Hyperbox::centered(&center, cfg.half_width)?;
    let grid = generate(SequenceKind::MonteCarlo { seed: grid_seed }, &bounds, size)?;
    let data = label_grid(&criterion, &grid)?;
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(&mut rng);

    // training sets are nested prefixes of one permutation
    let mut out = Vec::with_capacity(cfg.splits.len());
    for &split in &cfg.splits {
        let m = ((split * size as f64).round() as usize).clamp(1, size - 1);
        let training = data.subset(&order[..m]);
        let test = data.subset(&order[m..]);
        let start = Instant::now();
        let (pred, captured, single_class, train_seconds) = if training.has_both_classes() {
            let clf = train(&training, cfg.tuning.resolve(&training)?)?;
            let t = start.elapsed().as_secs_f64();
            let captured = clf.predict(beta0)? == Label::Inside;
            (batch_predict(&clf, test.grid().points())?, captured, false, t)
        } else {
            let only = training.labels()[0];
            (vec![only; test.len()], only == Label::Inside, true, 0.0)
        };
        let predict_seconds = start.elapsed().as_secs_f64() - train_seconds;
        let ok = pred.iter().zip(test.labels()).filter(|(a, b)| a == b).count();
        out.push(Outcome {
            accuracy: ok as f64 / test.len() as f64,
            captured,
            single_class,
            train_seconds,
            predict_seconds,
        });
    }
    Ok((data.inside_count(), out))
}

/// Repeats simulate, fit, label, split, train and score, then averages per
/// training fraction. Iterations run in parallel; each draws its own random
/// stream from the seed, so results do not depend on scheduling.
pub fn run_ols(cfg: &OlsConfig) -> Result<OlsReport> {
    cfg.validate()?;
    let size = cfg.grid_size()?;
    let beta0 = cfg.beta0();
    let results: Vec<Result<(usize, Vec<Outcome>)>> =
        (0..cfg.iterations).into_par_iter().map(|it| iteration(cfg, &beta0, size, it)).collect();
    let mut per_iter = Vec::with_capacity(cfg.iterations);
    for r in results {
        per_iter.push(r?);
    }
    let iters = cfg.iterations as f64;
    let rows = cfg
        .splits
        .iter()
        .enumerate()
        .map(|(k, &split)| {
            let m = ((split * size as f64).round() as usize).clamp(1, size - 1);
            let col = per_iter.iter().map(|(_, o)| &o[k]);
            OlsRow {
                split,
                training: m,
                test: size - m,
                test_accuracy: col.clone().map(|o| o.accuracy).sum::<f64>() / iters,
                capture_rate: col.clone().filter(|o| o.captured).count() as f64 / iters,
                single_class: col.clone().filter(|o| o.single_class).count(),
                train_seconds: col.clone().map(|o| o.train_seconds).sum(),
                predict_seconds: col.map(|o| o.predict_seconds).sum(),
            }
        })
        .collect();
    Ok(OlsReport {
        beta0,
        grid_size: size,
        threshold: crate::criterion::chi2_quantile(cfg.dim as u32, cfg.level)?,
        mean_inside: per_iter.iter().map(|(l1, _)| *l1 as f64).sum::<f64>() / iters,
        rows,
    })
}

/// One row per training fraction, shaped like the coverage table:
/// sizes, test accuracy and capture rate in percent, then timings.
pub fn write_ols_csv<W: Write>(mut w: W, report: &OlsReport) -> Result<()> {
    writeln!(w, "training,test,test_accuracy_pct,capture_pct,single_class,train_seconds,predict_seconds")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{:.4},{:.2},{},{:.3},{:.3}",
            r.training,
            r.test,
            100.0 * r.test_accuracy,
            100.0 * r.capture_rate,
            r.single_class,
            r.train_seconds,
            r.predict_seconds
        )?;
    }
    w.flush()?;
    Ok(())
}
