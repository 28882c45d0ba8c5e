//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use svmcs::criterion::{
    chi2_quantile, label_grid, ols_fit, qhat, simulate_linear_model, Criterion, EllipsoidCriterion,
    Label, LabeledGrid, MomentCriterion, MomentEstimate, SampleMoments,
};
use svmcs::experiment::{grid_size_rule, run_ols, run_synthetic, GridSizeRule, OlsConfig, SyntheticConfig};
use svmcs::grid::{distance, equidistribution_fraction, generate, Hyperbox, SequenceKind};
use svmcs::svm::{batch_predict, train, KernelParams, Predictor};
use svmcs::tuning::{auto_sigma, dominance_holds, sigma_bound_exterior, sigma_bound_interior, NearestPair, Tuning};

type Outcome = (bool, String);

fn main() {
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("perfect training fit", perfect_fit),
        ("disc agreement on nested grids", disc_agreement),
        ("disconnected regions", disconnected_regions),
        ("OLS trends at reduced scale", ols_trends),
        ("grid-size rules", grid_size_rules),
        ("equidistribution", equidistribution),
        ("qhat against brute force", qhat_oracle),
        ("chi-square quantiles", chi_square),
        ("sigma bounds", sigma_bounds),
        ("prediction throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn training_accuracy<P: Predictor>(clf: &P, data: &LabeledGrid) -> f64 {
    let pred = batch_predict(clf, data.grid().points()).unwrap();
    pred.iter().zip(data.labels()).filter(|(a, b)| a == b).count() as f64 / data.len() as f64
}

fn perfect_fit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_acc: f64 = 1.0;
    let mut slowest: f64 = 0.0;
    for run in 0..50 {
        let d = [1, 2, 5][run % 3];
        let n = rng.random_range(50..=500);
        let grid = generate(SequenceKind::MonteCarlo { seed: rng.random() }, &Hyperbox::unit(d).unwrap(), n).unwrap();
        // l0 > l1 + 1 > 2
        let l1 = rng.random_range(2..(n - 1) / 2);
        let mut labels = vec![Label::Outside; n];
        for i in rand::seq::index::sample(&mut rng, n, l1) {
            labels[i] = Label::Inside;
        }
        let data = LabeledGrid::new(grid, labels).unwrap();
        assert!(data.outside_count() > data.inside_count() + 1 && data.inside_count() + 1 > 2);
        let start = Instant::now();
        let clf = train(&data, auto_sigma(&data).unwrap()).unwrap();
        let acc = training_accuracy(&clf, &data);
        slowest = slowest.max(start.elapsed().as_secs_f64());
        worst_acc = worst_acc.min(acc);
    }
    (
        worst_acc == 1.0 && slowest < 5.0,
        format!("worst training accuracy {worst_acc} over 50 runs, slowest run {slowest:.2}s (limit 5s)"),
    )
}

fn disc_agreement() -> Outcome {
    let center = [0.5, 0.5];
    let radius = 0.3;
    let disc = EllipsoidCriterion::ball(center.to_vec(), radius).unwrap();
    let unit = Hyperbox::unit(2).unwrap();
    let eval = generate(SequenceKind::MonteCarlo { seed: 99 }, &unit, 10_000).unwrap();
    let truth: Vec<Label> = eval.points().iter().map(|p| disc.label(p).unwrap()).collect();
    let mut agreements = Vec::new();
    let mut worst_spacings: f64 = 0.0;
    for n in [500, 2000, 8000] {
        // Sobol prefixes, so the grids are nested
        let data = label_grid(&disc, &generate(SequenceKind::Sobol, &unit, n).unwrap()).unwrap();
        let params = Tuning::Spacing { factor: 0.75, c: 1000.0 }.resolve(&data).unwrap();
        let clf = train(&data, params).unwrap();
        let pred = batch_predict(&clf, eval.points()).unwrap();
        let spacing = unit.spacing(n);
        let mut agree = 0;
        for ((p, l), t) in eval.points().iter().zip(&pred).zip(&truth) {
            if l == t {
                agree += 1;
            } else {
                let off = (distance(p, &center) - radius).abs();
                worst_spacings = worst_spacings.max(off / spacing);
            }
        }
        agreements.push(agree as f64 / truth.len() as f64);
    }
    let monotone = agreements.windows(2).all(|w| w[1] >= w[0]);
    let ok = monotone && agreements[2] >= 0.99 && worst_spacings <= 1.0;
    (
        ok,
        format!(
            "agreement {:.4} / {:.4} / {:.4} at 500 / 2000 / 8000 points (need nondecreasing, last >= 0.99); \
             farthest disagreement {worst_spacings:.2} spacings from the boundary (limit 1)",
            agreements[0], agreements[1], agreements[2]
        ),
    )
}

fn disconnected_regions() -> Outcome {
    let cfg = SyntheticConfig { noise_scale: Some(0.0), grid_size: Some(4000), ..SyntheticConfig::default() };
    match run_synthetic(&cfg) {
        Ok(run) => {
            let r = &run.report;
            let ok = r.training_accuracy == 1.0 && r.component_hits.len() == 2 && r.component_hits.iter().all(|h| *h > 0);
            (ok, format!("training accuracy {}, predicted +1 points per component {:?}", r.training_accuracy, r.component_hits))
        }
        Err(e) => (false, format!("run failed: {e}")),
    }
}

fn ols_trends() -> Outcome {
    let cfg = OlsConfig::default();
    assert_eq!((cfg.dim, cfg.grid_size, cfg.iterations), (5, 8000, 100));
    let start = Instant::now();
    let report = match run_ols(&OlsConfig { splits: vec![0.05, 0.2, 0.5, 0.8], ..cfg }) {
        Ok(r) => r,
        Err(e) => return (false, format!("run failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let mut rows = report.rows.clone();
    rows.sort_by(|a, b| a.split.total_cmp(&b.split));
    let acc: Vec<f64> = rows.iter().map(|r| r.test_accuracy).collect();
    let cap: Vec<f64> = rows.iter().map(|r| r.capture_rate).collect();
    let ok = acc.iter().all(|a| *a >= 0.97)
        && acc.windows(2).all(|w| w[1] >= w[0])
        && cap.windows(2).all(|w| w[1] > w[0])
        && secs <= 1800.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" / ");
    (
        ok,
        format!(
            "splits 5/20/50/80%: accuracy {} (>= 0.97, weakly increasing), capture {} (strictly increasing), {secs:.0}s (limit 1800s)",
            fmt(&acc),
            fmt(&cap)
        ),
    )
}

fn grid_size_rules() -> Outcome {
    let got = [
        grid_size_rule(GridSizeRule::LogLinear, 50).unwrap(),
        grid_size_rule(GridSizeRule::LogLinear, 5000).unwrap(),
        grid_size_rule(GridSizeRule::LogExponential, 500).unwrap(),
    ];
    (got == [1956, 4259, 68534], format!("got {got:?}, expected [1956, 4259, 68534]"))
}

fn equidistribution() -> Outcome {
    let unit = Hyperbox::unit(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let boxes: Vec<Hyperbox> = (0..100)
        .map(|_| {
            let mut lo = vec![0.0; 2];
            let mut hi = vec![0.0; 2];
            for k in 0..2 {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                lo[k] = a.min(b);
                hi[k] = a.max(b).max(lo[k] + 1e-9);
            }
            Hyperbox::new(lo, hi).unwrap()
        })
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, tol) in [
        (SequenceKind::Sobol, 0.02),
        (SequenceKind::Weyl, 0.02),
        (SequenceKind::Baker, 0.02),
        (SequenceKind::MonteCarlo { seed: 1 }, 0.05),
    ] {
        let grid = generate(kind, &unit, 100_000).unwrap();
        let worst = boxes
            .iter()
            .map(|b| (equidistribution_fraction(&grid, b).unwrap() - b.volume()).abs())
            .fold(0.0, f64::max);
        ok &= worst <= tol;
        parts.push(format!("{kind} {worst:.4} (<= {tol})"));
    }
    (ok, format!("worst |fraction - volume| over 100 sub-boxes: {}", parts.join(", ")))
}

fn qhat_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;
    let (mut worst_diff, mut its_slack) = (0.0_f64, 0.0_f64);
    for inst in 0..20 {
        let p = 1 + inst % 3;
        let a: DMatrix<f64> = DMatrix::from_fn(p, p, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.5 * z
        });
        let v: DMatrix<f64> = &a * a.transpose() + DMatrix::<f64>::identity(p, p);
        let m = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let q = qhat(&MomentEstimate { mean: m.clone(), covariance: v.clone() }, 1).unwrap();

        let vinv = v.clone().try_inverse().unwrap();
        let eig = v.symmetric_eigenvalues();
        let (lmin, lmax) = (eig.min(), eig.max());
        let neg = m.map(|x| x.min(0.0)).norm();
        // ||m - t*|| <= sqrt(cond) ||m^-||, which also bounds the search box
        let reach = (lmax / lmin).sqrt() * neg;
        let top = m.norm() + reach;
        let steps = [200_000, 2_000, 150][p - 1];
        let h = top / steps as f64;
        let mut best = f64::INFINITY;
        let mut idx = vec![0usize; p];
        let mut t = DVector::zeros(p);
        loop {
            for k in 0..p {
                t[k] = idx[k] as f64 * h;
            }
            let r = &m - &t;
            best = best.min(r.dot(&(&vinv * &r)));
            let mut k = 0;
            while k < p {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == p {
                break;
            }
        }
        let delta = h * (p as f64).sqrt() / 2.0;
        let slack = (2.0 * reach * delta + delta * delta) / lmin;
        let diff = (q - best).abs();
        ok &= diff <= 1e-6 + slack && q <= best + 1e-6;
        if diff > worst_diff {
            (worst_diff, its_slack) = (diff, slack);
        }
    }
    (ok, format!("20 instances with p <= 3; largest |qhat - grid min| {worst_diff:.2e} against an allowance of 1e-6 + {its_slack:.2e} grid slack"))
}

/// CDF of chi-square(k) by Simpson's rule after substituting x = u^2,
/// which removes the singularity at zero for k = 1.
fn chi2_cdf_oracle(k: u32, x: f64, gamma_half_k: f64) -> f64 {
    let kf = k as f64;
    let norm = 2.0 / (2f64.powf(kf / 2.0) * gamma_half_k);
    let f = |u: f64| norm * u.powi(k as i32 - 1) * (-u * u / 2.0).exp();
    let b = x.sqrt();
    let n = 20_000;
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn chi_square() -> Outcome {
    let mut worst_closed: f64 = 0.0;
    for prob in [0.1, 0.5, 0.9, 0.95, 0.99, 0.999] {
        let exact = -2.0 * (1.0 - prob as f64).ln();
        worst_closed = worst_closed.max((chi2_quantile(2, prob).unwrap() - exact).abs());
    }
    let mut worst_oracle: f64 = 0.0;
    for (k, g) in [(1u32, 1.772_453_850_905_516), (5, 1.329_340_388_179_137), (10, 24.0)] {
        for prob in [0.5, 0.9, 0.95, 0.99] {
            let (mut lo, mut hi) = (0.0, 200.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if chi2_cdf_oracle(k, mid, g) < prob {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            worst_oracle = worst_oracle.max((chi2_quantile(k, prob).unwrap() - 0.5 * (lo + hi)).abs());
        }
    }
    (
        worst_closed <= 1e-10 && worst_oracle <= 1e-6,
        format!("df=2 closed form max error {worst_closed:.1e} (<= 1e-10); df 1/5/10 integration oracle max error {worst_oracle:.1e} (<= 1e-6)"),
    )
}

fn sigma_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut held = 0;
    let mut violated = 0;
    for i in 0..100 {
        let near = rng.random_range(0.001..1.0);
        let far = near + rng.random_range(0.001..1.0);
        let n_far = rng.random_range(2..5000);
        let n_near = rng.random_range(1..5000);
        let (pair, bound) = if i % 2 == 0 {
            let pair = NearestPair { interior_dist: near, exterior_dist: far, n_interior: n_near, n_exterior: n_far };
            (pair, sigma_bound_interior(&pair).unwrap())
        } else {
            let pair = NearestPair { interior_dist: far, exterior_dist: near, n_interior: n_far, n_exterior: n_near };
            (pair, sigma_bound_exterior(&pair).unwrap())
        };
        if dominance_holds(&pair, bound.source, bound.sigma2(0.99)) {
            held += 1;
        }
        if !dominance_holds(&pair, bound.source, bound.sigma2(1.5)) {
            violated += 1;
        }
    }
    (
        held == 100 && violated >= 1,
        format!("dominance holds at 0.99x the bound in {held}/100; violated at 1.5x in {violated}/100 (need >= 1)"),
    )
}

fn throughput() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        // classifier for a 5-dimensional OLS confidence ellipsoid
        let beta0 = [0.3, -0.5, 0.8, 0.1, -0.2];
        let (x, y) = simulate_linear_model(500, &beta0, 7);
        let fit = ols_fit(&x, &y).unwrap();
        let center: Vec<f64> = fit.beta.iter().copied().collect();
        let ellipsoid = EllipsoidCriterion::from_covariance(center.clone(), &fit.covariance, 0.95).unwrap();
        let bounds = Hyperbox::centered(&center, 0.25).unwrap();
        let data = label_grid(&ellipsoid, &generate(SequenceKind::Sobol, &bounds, 8000).unwrap()).unwrap();
        let clf = train(&data, KernelParams::new(4e-3, 10.0).unwrap()).unwrap();
        let svs = clf.support_count();

        let points = generate(SequenceKind::MonteCarlo { seed: 3 }, &bounds, 1_000_000).unwrap();
        let start = Instant::now();
        let pred = batch_predict(&clf, points.points()).unwrap();
        let svm_secs = start.elapsed().as_secs_f64();
        assert_eq!(pred.len(), 1_000_000);
        let svm_per_point = svm_secs / 1e6;

        // five moment inequalities E[y_j - theta_j] >= 0 over n = 5000 draws
        let obs = generate(SequenceKind::MonteCarlo { seed: 5 }, &Hyperbox::new(vec![-1.0; 5], vec![1.0; 5]).unwrap(), 5000)
            .unwrap();
        let model = SampleMoments::new(obs.points().clone(), 5, 5, |o, th, out| {
            for j in 0..5 {
                out[j] = o[j] - th[j];
            }
        })
        .unwrap();
        let moments = MomentCriterion::new(model, 0.05).unwrap();
        let probe = generate(SequenceKind::MonteCarlo { seed: 9 }, &Hyperbox::new(vec![-0.2; 5], vec![0.1; 5]).unwrap(), 5000)
            .unwrap();
        let start = Instant::now();
        label_grid(&moments, &probe).unwrap();
        let moment_per_point = start.elapsed().as_secs_f64() / 5000.0;
        let ratio = moment_per_point / svm_per_point;
        (
            svs <= 1000 && svm_secs <= 60.0 && ratio >= 50.0,
            format!(
                "10^6 points with {svs} support vectors in {svm_secs:.2}s on one thread (limit 60s); \
                 {:.2} us/point vs {:.1} us/point for the p=5 moment criterion, ratio {ratio:.0}x (>= 50x)",
                svm_per_point * 1e6,
                moment_per_point * 1e6
            ),
        )
    })
}
