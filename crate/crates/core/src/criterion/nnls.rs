//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    /// `||A x - b||^2` at the solution.
    pub residual_sq: f64,
    pub iterations: usize,
}

/// Solves `min ||A x - b||^2` subject to `x >= 0`.
///
/// `max_iterations` caps the total number of passive-set solves; the usual
/// choice is `30 * columns`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iterations: usize) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::invalid(format!("rhs has length {}, expected {m}", b.len())));
    }
    let tol = 10.0 * f64::EPSILON * a.abs().max() * (m.max(n) as f64);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0;

    let gradient = |x: &DVector<f64>| a.transpose() * (b - a * x);
    let mut w = gradient(&x);

    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ => break,
        };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > max_iterations {
                return Err(Error::SolverFailure(format!(
                    "NNLS did not converge within {max_iterations} iterations"
                )));
            }
            let z = passive_solve(a, b, &passive)?;
            let feasible = (0..n).filter(|&i| passive[i]).all(|i| z[i] > tol);
            if feasible {
                x = z;
                break;
            }
            // step from x toward z until the first passive coordinate hits zero
            let mut step = f64::INFINITY;
            for i in (0..n).filter(|&i| passive[i] && z[i] <= tol) {
                let denom = x[i] - z[i];
                if denom > 0.0 {
                    step = step.min(x[i] / denom);
                }
            }
            if !step.is_finite() {
                step = 0.0;
            }
            x += (&z - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
        w = gradient(&x);
    }

    let r = a * &x - b;
    Ok(NnlsSolution { residual_sq: r.norm_squared(), x, iterations })
}

/// Unconstrained least squares restricted to the passive columns; the other
/// coordinates are zero.
fn passive_solve(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = a.select_columns(&cols);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-14)
        .map_err(|e| Error::NumericalConditioning(format!("NNLS subproblem: {e}")))?;
    let mut z = DVector::zeros(passive.len());
    for (k, &i) in cols.iter().enumerate() {
        z[i] = sol[k];
    }
    Ok(z)
}
