//! Sequential minimal optimization for the soft-margin dual
//! `min 1/2 a'Qa - e'a` s.t. `0 <= a <= C`, `y'a = 0`, `Q_ij = y_i y_j K_ij`,
//! with second-order working-set selection.

use std::num::NonZeroUsize;
use std::rc::Rc;

use lru::LruCache;

use super::kernel::Kernel;
use crate::criterion::LabeledGrid;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SmoOptions {
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iterations: u64,
    /// Budget for cached kernel rows, in bytes.
    pub cache_bytes: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions { tolerance: 1e-6, max_iterations: 10_000_000, cache_bytes: 256 << 20 }
    }
}

/// Dual weights and offset for one training set.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub iterations: u64,
}

struct RowCache<'a> {
    kernel: Kernel,
    data: &'a [f64],
    dim: usize,
    rows: LruCache<usize, Rc<Vec<f64>>>,
}

impl RowCache<'_> {
    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        if let Some(r) = self.rows.get(&i) {
            return Rc::clone(r);
        }
        let d = self.dim;
        let xi = &self.data[i * d..(i + 1) * d];
        let row: Vec<f64> = self.data.chunks_exact(d).map(|xt| self.kernel.eval(xi, xt)).collect();
        let row = Rc::new(row);
        self.rows.put(i, Rc::clone(&row));
        row
    }
}

pub fn solve_dual(data: &LabeledGrid, kernel: Kernel, c: f64, opts: &SmoOptions) -> Result<DualSolution> {
    kernel.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("C must be positive and finite, got {c}")));
    }
    if !data.has_both_classes() {
        return Err(Error::DegenerateTraining(format!(
            "training data has {} inside and {} outside points; both classes are required",
            data.inside_count(),
            data.outside_count()
        )));
    }
    let n = data.len();
    let dim = data.dim();
    let flat = data.grid().points().as_flat();
    let y: Vec<f64> = data.labels().iter().map(|l| l.value()).collect();
    let qd: Vec<f64> = flat.chunks_exact(dim).map(|x| kernel.eval(x, x)).collect();

    let capacity = (opts.cache_bytes / (n * 8).max(1)).clamp(2, n.max(2));
    let mut cache = RowCache {
        kernel,
        data: flat,
        dim,
        rows: LruCache::new(NonZeroUsize::new(capacity).unwrap()),
    };

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0u64;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            break;
        }
        let ki = cache.row(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let diff = gmax + yg;
            if diff > 0.0 {
                let mut quad = qd[i] + qd[t] - 2.0 * ki[t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -diff * diff / quad;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < opts.tolerance || j == usize::MAX {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::SolverFailure(format!(
                "SMO did not reach tolerance {} within {} iterations (violation {})",
                opts.tolerance,
                opts.max_iterations,
                gmax + gmax2
            )));
        }
        iterations += 1;

        let kj = cache.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = qd[i] + qd[j] - 2.0 * ki[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    // offset: mean of -y_i G_i over free vectors, midpoint of the feasible
    // range when every vector sits at a bound
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };
    let support_indices = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    log::debug!("SMO converged after {iterations} iterations, {free} free vectors");
    Ok(DualSolution { alphas: alpha, bias: -rho, support_indices, iterations })
}
