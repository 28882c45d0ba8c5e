//! Chi-square quantiles and the conservative moment-inequality critical value.

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Inverse CDF of the chi-square distribution with `df` degrees of freedom.
///
/// Starts from the Wilson–Hilferty cube-root approximation, brackets the
/// root of `P(df/2, x/2) - prob`, then runs Newton steps that fall back to
/// bisection whenever they leave the bracket. Absolute accuracy is better
/// than 1e-8 across the usual range of `prob`.
pub fn chi2_quantile(df: u32, prob: f64) -> Result<f64> {
    if df == 0 {
        return Err(Error::invalid("chi-square degrees of freedom must be >= 1"));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::invalid(format!("probability {prob} is outside (0, 1)")));
    }
    let k = df as f64;
    let a = k / 2.0;
    let cdf = |x: f64| gamma_lr(a, x / 2.0);
    let sf = |x: f64| gamma_ur(a, x / 2.0);
    let log_norm = -a * std::f64::consts::LN_2 - ln_gamma(a);
    let density = |x: f64| (log_norm + (a - 1.0) * x.ln() - x / 2.0).exp();
    // work on whichever tail keeps the residual well conditioned
    let upper_tail = prob > 0.5;
    let residual = |x: f64| if upper_tail { (1.0 - prob) - sf(x) } else { cdf(x) - prob };

    let z = standard_normal_quantile(prob);
    let h = 2.0 / (9.0 * k);
    let mut x = k * (1.0 - h + z * h.sqrt()).powi(3);
    if !(x.is_finite() && x > 0.0) {
        x = k.max(1e-3) * prob;
    }

    // residual(0) = -prob < 0, so [0, hi] brackets once residual(hi) >= 0
    let (mut lo, mut hi) = (0.0_f64, x);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::SolverFailure("chi-square quantile bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = density(x);
        let mut next = x - r / d;
        if !(next.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * x.max(1.0) || hi - lo <= 1e-14 * hi.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::SolverFailure("chi-square quantile did not converge".into()))
}

/// Conservative critical value for `p` moment inequalities at level `alpha`:
/// the chi-bar-square mixture is bounded above by the full `p`-degree
/// chi-square, so `chi2_p(1 - alpha)` never under-covers.
pub fn critical_value(p: usize, alpha: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::invalid("need at least one moment inequality"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("significance level {alpha} is outside (0, 1)")));
    }
    chi2_quantile(p as u32, 1.0 - alpha)
}

/// Acklam's rational approximation, ~1e-9 relative. Only seeds the
/// root-finder above, so its accuracy does not limit the quantile.
fn standard_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] =
        [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const LOW: f64 = 0.02425;
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -standard_normal_quantile(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_degrees_closed_form() {
        for p in [0.01, 0.3, 0.5, 0.9, 0.95, 0.999] {
            let exact = -2.0 * (1.0 - p as f64).ln();
            assert!((chi2_quantile(2, p).unwrap() - exact).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn known_values() {
        assert!((chi2_quantile(5, 0.95).unwrap() - 11.0705).abs() < 1e-4);
        assert!((chi2_quantile(1, 0.5).unwrap() - 0.454936).abs() < 1e-6);
        assert!((critical_value(2, 0.05).unwrap() - 5.99146).abs() < 1e-5);
        assert!((critical_value(1, 0.05).unwrap() - 3.84146).abs() < 1e-5);
        assert!((critical_value(5, 0.05).unwrap() - 11.0705).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_arguments() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(chi2_quantile(3, p), Err(Error::InvalidArgument(_))));
        }
        assert!(chi2_quantile(0, 0.5).is_err());
        assert!(critical_value(2, 0.0).is_err());
        assert!(critical_value(2, 1.0).is_err());
        assert!(critical_value(0, 0.05).is_err());
    }

    #[test]
    fn extreme_tails_converge() {
        for df in [1, 3, 30, 200] {
            for p in [1e-10, 1e-4, 0.999_999, 1.0 - 1e-12] {
                let x = chi2_quantile(df, p).unwrap();
                assert!(x > 0.0 && x.is_finite());
            }
        }
    }

    #[test]
    fn increasing_in_prob_and_df() {
        let probs = [0.001, 0.05, 0.2, 0.5, 0.8, 0.95, 0.999];
        for df in 1..=12 {
            let row: Vec<f64> = probs.iter().map(|&p| chi2_quantile(df, p).unwrap()).collect();
            assert!(row.windows(2).all(|w| w[0] < w[1]), "df={df}");
            for &p in &probs {
                assert!(chi2_quantile(df, p).unwrap() < chi2_quantile(df + 1, p).unwrap());
            }
        }
    }

    #[test]
    fn normal_quantile_seed_is_close() {
        assert!(standard_normal_quantile(0.5).abs() < 1e-12);
        assert!((standard_normal_quantile(0.975) - 1.959963984540054).abs() < 1e-8);
        assert!((standard_normal_quantile(0.001) + 3.090232306167813).abs() < 1e-8);
    }
}
