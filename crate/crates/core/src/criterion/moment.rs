use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::chi2::critical_value;
use super::nnls::nnls;
use super::{check_dim, Criterion};
use crate::error::{Error, Result};
use crate::grid::Points;

/// Sample moments and their covariance at one parameter value.
#[derive(Clone, Debug)]
pub struct MomentEstimate {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// A model whose true parameters satisfy `E[m(y, x, theta)] >= 0`.
pub trait MomentModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of moment inequalities, p.
    fn moment_count(&self) -> usize;

    /// Sample size n the moments are averaged over.
    fn sample_size(&self) -> usize;

    fn estimate(&self, theta: &[f64]) -> Result<MomentEstimate>;
}

/// `n * min_{t >= 0} (mean - t)' V^{-1} (mean - t)`.
///
/// With `V = L L'` the objective is `||L^{-1} t - L^{-1} mean||^2`, an NNLS
/// problem in `t`. Returns exactly zero when every moment is nonnegative.
pub fn qhat(estimate: &MomentEstimate, n: usize) -> Result<f64> {
    let p = estimate.mean.len();
    if p == 0 {
        return Err(Error::invalid("need at least one moment"));
    }
    if estimate.covariance.shape() != (p, p) {
        return Err(Error::invalid(format!(
            "covariance is {:?}, expected {p}x{p}",
            estimate.covariance.shape()
        )));
    }
    let cov = &estimate.covariance;
    let scale = cov.abs().max();
    if !(scale.is_finite() && scale > 0.0) || (cov - cov.transpose()).abs().max() > 1e-10 * scale {
        return Err(Error::NumericalConditioning("moment covariance is not symmetric".into()));
    }
    if estimate.mean.iter().all(|m| *m >= 0.0) {
        return Ok(0.0);
    }
    let chol = cov.clone().cholesky().ok_or_else(|| {
        Error::NumericalConditioning("moment covariance is not positive definite".into())
    })?;
    let l = chol.l();
    let whiten = l
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::NumericalConditioning("singular Cholesky factor".into()))?;
    let target = &whiten * &estimate.mean;
    let sol = nnls(&whiten, &target, 30 * p)?;
    Ok(n as f64 * sol.residual_sq.max(0.0))
}

/// Moment-inequality test: `theta` is inside when `n * Qhat(theta)` is
/// below the conservative chi-square critical value.
pub struct MomentCriterion<M> {
    model: M,
    alpha: f64,
    critical: f64,
}

impl<M: MomentModel> MomentCriterion<M> {
    pub fn new(model: M, alpha: f64) -> Result<Self> {
        let critical = critical_value(model.moment_count(), alpha)?;
        Ok(MomentCriterion { model, alpha, critical })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn qhat(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.model.dim(), theta)?;
        let est = self.model.estimate(theta)?;
        if est.mean.len() != self.model.moment_count() {
            return Err(Error::invalid("moment model returned the wrong number of moments"));
        }
        qhat(&est, self.model.sample_size())
    }
}

impl<M: MomentModel> Criterion for MomentCriterion<M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn statistic(&self, theta: &[f64]) -> Result<f64> {
        self.qhat(theta)
    }

    fn threshold(&self) -> f64 {
        self.critical
    }
}

type MomentFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// Moments averaged over a stored sample. `moment_fn(observation, theta,
/// out)` writes the p moment values for one observation; the covariance is
/// the (1/n) sample covariance of those values, recomputed at every theta.
#[derive(Clone)]
pub struct SampleMoments {
    observations: Points,
    dim: usize,
    moment_count: usize,
    moment_fn: Arc<MomentFn>,
}

impl SampleMoments {
    pub fn new<F>(observations: Points, dim: usize, moment_count: usize, moment_fn: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if observations.len() < 2 {
            return Err(Error::invalid("need at least two observations"));
        }
        if dim == 0 || moment_count == 0 {
            return Err(Error::invalid("dimension and moment count must be >= 1"));
        }
        Ok(SampleMoments { observations, dim, moment_count, moment_fn: Arc::new(moment_fn) })
    }

    pub fn observations(&self) -> &Points {
        &self.observations
    }
}

impl MomentModel for SampleMoments {
    fn dim(&self) -> usize {
        self.dim
    }

    fn moment_count(&self) -> usize {
        self.moment_count
    }

    fn sample_size(&self) -> usize {
        self.observations.len()
    }

    fn estimate(&self, theta: &[f64]) -> Result<MomentEstimate> {
        let p = self.moment_count;
        let n = self.observations.len();
        let mut values = vec![0.0; n * p];
        for (obs, out) in self.observations.iter().zip(values.chunks_exact_mut(p)) {
            (self.moment_fn)(obs, theta, out);
        }
        let mut mean = DVector::zeros(p);
        for row in values.chunks_exact(p) {
            for k in 0..p {
                mean[k] += row[k];
            }
        }
        mean /= n as f64;
        let mut covariance = DMatrix::zeros(p, p);
        for row in values.chunks_exact(p) {
            for a in 0..p {
                let da = row[a] - mean[a];
                for b in 0..=a {
                    covariance[(a, b)] += da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..p {
            for b in 0..=a {
                let v = covariance[(a, b)] / n as f64;
                covariance[(a, b)] = v;
                covariance[(b, a)] = v;
            }
        }
        Ok(MomentEstimate { mean, covariance })
    }
}

/// Linear model with an interval-censored outcome, `y_lo <= x'theta + e <=
/// y_hi`.
///
/// Observation rows are `[x_1, .., x_k, y_lo, y_hi]` and `theta` is
/// `(intercept, slope_1, .., slope_k)`. Instruments are `1` and
/// `1{x_j > 0}`; each yields an upper and a lower moment, so p = 2(k + 1).
pub fn interval_regression(observations: Points) -> Result<SampleMoments> {
    let width = observations.dim();
    if width < 3 {
        return Err(Error::invalid("interval data needs at least one covariate and two bounds"));
    }
    let k = width - 2;
    let dim = k + 1;
    SampleMoments::new(observations, dim, 2 * dim, move |obs, theta, out| {
        let x = &obs[..k];
        let (lo, hi) = (obs[k], obs[k + 1]);
        let fit = theta[0] + x.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>();
        for j in 0..dim {
            let z = if j == 0 || x[j - 1] > 0.0 { 1.0 } else { 0.0 };
            out[2 * j] = z * (hi - fit);
            out[2 * j + 1] = z * (fit - lo);
        }
    })
}

/// Simulates `n` rows for [`interval_regression`]: standard normal
/// covariates and errors. Outcomes are reported as `[floor(y), floor(y) + w]`
/// with `w` one or two at random; a constant width would make the upper and
/// lower intercept moments sum to a constant, leaving the covariance singular.
pub fn simulate_interval_data(n: usize, beta: &[f64], seed: u64) -> Result<Points> {
    if beta.len() < 2 {
        return Err(Error::invalid("need an intercept and at least one slope"));
    }
    let k = beta.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Points::with_capacity(k + 2, n);
    let mut row = vec![0.0; k + 2];
    for _ in 0..n {
        let mut y = beta[0];
        for j in 0..k {
            let x: f64 = StandardNormal.sample(&mut rng);
            row[j] = x;
            y += beta[j + 1] * x;
        }
        let e: f64 = StandardNormal.sample(&mut rng);
        y += e;
        let w = if rng.random::<bool>() { 2.0 } else { 1.0 };
        row[k] = y.floor();
        row[k + 1] = y.floor() + w;
        points.push(&row)?;
    }
    Ok(points)
}
