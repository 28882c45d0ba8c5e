use svmcs::criterion::{ols_fit, simulate_linear_model};
use svmcs::experiment::{run_synthetic, SyntheticConfig};

#[test]
fn ols_estimates_fall_within_three_standard_errors() {
    let beta0 = [1.0, 0.5, -0.5, 0.25, -0.25];
    let (mut within, mut total) = (0usize, 0usize);
    for seed in 0..1000 {
        let (x, y) = simulate_linear_model(500, &beta0, seed);
        let fit = ols_fit(&x, &y).unwrap();
        for (j, b) in beta0.iter().enumerate() {
            let se = fit.covariance[(j, j)].sqrt();
            within += usize::from((fit.beta[j] - b).abs() <= 3.0 * se);
            total += 1;
        }
    }
    let rate = within as f64 / total as f64;
    assert!(rate >= 0.99, "coverage {rate}");
}

#[test]
fn large_sample_errors_sit_near_the_boundary() {
    let cfg = SyntheticConfig { n: 5000, eval_count: 0, ..SyntheticConfig::default() };
    let run = run_synthetic(&cfg).unwrap();
    let r = &run.report;
    assert_eq!(r.grid_size, 4259);
    assert_eq!(r.training_accuracy, 1.0);
    assert!(r.mean_error_distance < r.spacing, "{} vs spacing {}", r.mean_error_distance, r.spacing);
    assert!(r.true_accuracy > 0.95, "{}", r.true_accuracy);
}
