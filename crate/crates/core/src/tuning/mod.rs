//! Bandwidth and soft-margin choices.
//!
//! [`auto_sigma`] puts the classifier in the small-bandwidth regime where it
//! reproduces every training label. The sigma bounds give, for a single
//! point, how large `2 sigma^2` may be before the nearest same-label grid
//! point stops outweighing all opposite-label points combined.

use serde::{Deserialize, Serialize};

use crate::criterion::{check_dim, Label, LabeledGrid};
use crate::error::{Error, Result};
use crate::grid::{min_pairwise_distance, squared_distance, Hyperbox};
use crate::svm::KernelParams;

/// Smallest admissible C, `l0 / (l0 + l1)`.
pub fn c_lower_bound(l0: usize, l1: usize) -> Result<f64> {
    if l0 == 0 || l1 == 0 {
        return Err(Error::invalid(format!("class counts must be positive, got l0={l0}, l1={l1}")));
    }
    if !(l0 > l1 + 1 && l1 + 1 > 2) {
        log::warn!("class counts l0={l0}, l1={l1} do not satisfy l0 > l1 + 1 > 2");
    }
    Ok(l0 as f64 / (l0 + l1) as f64)
}

fn require_both(data: &LabeledGrid) -> Result<()> {
    if !data.has_both_classes() {
        return Err(Error::DegenerateTraining(format!(
            "need both classes, got {} inside and {} outside",
            data.inside_count(),
            data.outside_count()
        )));
    }
    Ok(())
}

/// `sigma = 0.1 * min pairwise distance`, `C = max(10, 2 l0 / (l0 + l1))`.
pub fn auto_sigma(data: &LabeledGrid) -> Result<KernelParams> {
    require_both(data)?;
    let md = min_pairwise_distance(data.grid().points())?;
    let lb = c_lower_bound(data.outside_count(), data.inside_count())?;
    KernelParams::new((0.1 * md).powi(2), (2.0 * lb).max(10.0))
}

/// `sigma = factor * (vol / count)^(1/d)`, returned as sigma^2. Scales the
/// bandwidth with the typical gap between equidistributed points rather than
/// the single closest pair.
pub fn spacing_sigma2(bounds: &Hyperbox, count: usize, factor: f64) -> Result<f64> {
    if count == 0 || !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid("spacing rule needs count >= 1 and a positive factor"));
    }
    Ok((factor * bounds.spacing(count)).powi(2))
}

/// How the pipeline picks kernel parameters for a training set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum Tuning {
    /// [`auto_sigma`].
    Auto,
    /// [`spacing_sigma2`] over the training grid's box and size.
    Spacing { factor: f64, c: f64 },
    Fixed { sigma2: f64, c: f64 },
}

impl Tuning {
    pub fn resolve(&self, data: &LabeledGrid) -> Result<KernelParams> {
        match *self {
            Tuning::Auto => auto_sigma(data),
            Tuning::Spacing { factor, c } => {
                KernelParams::new(spacing_sigma2(data.grid().bounds(), data.len(), factor)?, c)
            }
            Tuning::Fixed { sigma2, c } => KernelParams::new(sigma2, c),
        }
    }
}

/// Distances from a point to its nearest +1 and nearest -1 grid points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearestPair {
    pub interior_dist: f64,
    pub exterior_dist: f64,
    pub n_interior: usize,
    pub n_exterior: usize,
}

pub fn nearest_pair(theta: &[f64], data: &LabeledGrid) -> Result<NearestPair> {
    require_both(data)?;
    check_dim(data.dim(), theta)?;
    let (mut din, mut dout) = (f64::INFINITY, f64::INFINITY);
    for (p, l) in data.grid().points().iter().zip(data.labels()) {
        let d2 = squared_distance(p, theta);
        match l {
            Label::Inside => din = din.min(d2),
            Label::Outside => dout = dout.min(d2),
        }
    }
    Ok(NearestPair {
        interior_dist: din.sqrt(),
        exterior_dist: dout.sqrt(),
        n_interior: data.inside_count(),
        n_exterior: data.outside_count(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSource {
    /// The point should be labeled +1; its nearest +1 point must dominate.
    Interior,
    /// The point should be labeled -1; its nearest -1 point must dominate.
    Exterior,
}

/// Strict upper bound on `2 sigma^2`; infinite when the opposite class has a
/// single point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaBound {
    pub upper_2sigma2: f64,
    pub source: BoundSource,
}

impl SigmaBound {
    /// Largest sigma^2 strictly admitted, scaled by `fraction`.
    pub fn sigma2(&self, fraction: f64) -> f64 {
        fraction * self.upper_2sigma2 / 2.0
    }
}

fn bound(near: f64, far: f64, n_far: usize, source: BoundSource) -> Result<SigmaBound> {
    let gap = far * far - near * near;
    if !(gap > 0.0) {
        return Err(Error::EmptyInterval {
            probe: None,
            reason: format!(
                "nearest opposite point at distance {far} is not farther than the nearest same-label point at {near}"
            ),
        });
    }
    let upper_2sigma2 = if n_far <= 1 { f64::INFINITY } else { gap / (n_far as f64).ln() };
    Ok(SigmaBound { upper_2sigma2, source })
}

/// `2 sigma^2 < (ext^2 - int^2) / ln(n_exterior)`.
pub fn sigma_bound_interior(pair: &NearestPair) -> Result<SigmaBound> {
    bound(pair.interior_dist, pair.exterior_dist, pair.n_exterior, BoundSource::Interior)
}

/// `2 sigma^2 < (int^2 - ext^2) / ln(n_interior)`.
pub fn sigma_bound_exterior(pair: &NearestPair) -> Result<SigmaBound> {
    bound(pair.exterior_dist, pair.interior_dist, pair.n_interior, BoundSource::Exterior)
}

/// Checks `K(near) > n_far * K(far)` in log space, with every opposite point
/// placed at the nearest opposite distance (the worst case).
pub fn dominance_holds(pair: &NearestPair, source: BoundSource, sigma2: f64) -> bool {
    let (near, far, n_far) = match source {
        BoundSource::Interior => (pair.interior_dist, pair.exterior_dist, pair.n_exterior),
        BoundSource::Exterior => (pair.exterior_dist, pair.interior_dist, pair.n_interior),
    };
    let two_s2 = 2.0 * sigma2;
    -near * near / two_s2 > (n_far as f64).ln() - far * far / two_s2
}

/// Safety factor applied to the tightest `2 sigma^2` bound.
pub const SAFETY_FACTOR: f64 = 0.5;

/// sigma^2 under which the all-ones decision rule labels every probe
/// correctly: half the smallest per-probe bound on `2 sigma^2`, halved again
/// to convert to sigma^2. When every bound is infinite there is nothing to
/// protect and the squared diameter of the grid box is returned.
pub fn admissible_sigma(data: &LabeledGrid, probes: &[(Vec<f64>, Label)]) -> Result<f64> {
    require_both(data)?;
    if probes.is_empty() {
        return Err(Error::invalid("need at least one probe"));
    }
    let mut tightest = f64::INFINITY;
    for (i, (theta, label)) in probes.iter().enumerate() {
        let pair = nearest_pair(theta, data)?;
        let b = match label {
            Label::Inside => sigma_bound_interior(&pair),
            Label::Outside => sigma_bound_exterior(&pair),
        }
        .map_err(|e| match e {
            Error::EmptyInterval { reason, .. } => Error::EmptyInterval { probe: Some(i), reason },
            other => other,
        })?;
        tightest = tightest.min(b.upper_2sigma2);
    }
    if tightest.is_infinite() {
        return Ok(data.grid().bounds().diameter().powi(2));
    }
    Ok(SAFETY_FACTOR * tightest / 2.0)
}

/// Probes equal to the training points with their own labels.
pub fn training_probes(data: &LabeledGrid) -> Vec<(Vec<f64>, Label)> {
    (0..data.len()).map(|i| (data.point(i).to_vec(), data.labels()[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate, Grid, Points, SequenceKind};
    use crate::svm::{batch_predict, simplified_decision, train};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64], labels: &[i8]) -> LabeledGrid {
        let pts = Points::from_flat(1, xs.to_vec()).unwrap();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let g = Grid::from_parts(Hyperbox::new(vec![lo], vec![hi]).unwrap(), SequenceKind::Sobol, pts, xs.len())
            .unwrap();
        LabeledGrid::new(g, labels.iter().map(|&v| Label::try_from(v).unwrap()).collect()).unwrap()
    }

    fn disc_grid(n: usize, seed: u64) -> LabeledGrid {
        let g = generate(SequenceKind::MonteCarlo { seed }, &Hyperbox::unit(2).unwrap(), n).unwrap();
        let labels = g
            .points()
            .iter()
            .map(|p| Label::from_sign(0.09 - squared_distance(p, &[0.5, 0.5])))
            .collect();
        LabeledGrid::new(g, labels).unwrap()
    }

    fn accuracy(data: &LabeledGrid) -> f64 {
        let clf = train(data, auto_sigma(data).unwrap()).unwrap();
        let pred = batch_predict(&clf, data.grid().points()).unwrap();
        pred.iter().zip(data.labels()).filter(|(a, b)| a == b).count() as f64 / data.len() as f64
    }

    #[test]
    fn c_bound_examples() {
        assert!((c_lower_bound(6, 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c_lower_bound(5, 5).unwrap(), 0.5);
        assert_eq!(c_lower_bound(1000, 1).unwrap(), 1000.0 / 1001.0);
        assert!(c_lower_bound(0, 3).is_err());
    }

    #[test]
    fn auto_sigma_examples() {
        let p = auto_sigma(&line(&[0.0, 1.0], &[1, -1])).unwrap();
        assert!((p.sigma2 - 0.01).abs() < 1e-15);
        assert_eq!(p.c, 10.0);
        let p = auto_sigma(&line(&[0.0, 0.05, 0.5, 1.0], &[1, -1, -1, -1])).unwrap();
        assert!((p.sigma2.sqrt() - 0.005).abs() < 1e-12);
        assert!(matches!(auto_sigma(&line(&[0.0, 0.0, 1.0], &[1, -1, 1])), Err(Error::DuplicatePoint { .. })));
        assert!(matches!(auto_sigma(&line(&[0.0, 1.0], &[1, 1])), Err(Error::DegenerateTraining(_))));
    }

    #[test]
    fn auto_sigma_fits_training_data() {
        assert_eq!(accuracy(&disc_grid(100, 1)), 1.0);
        assert_eq!(accuracy(&disc_grid(30, 2)), 1.0);
    }

    #[test]
    fn nearest_pair_examples() {
        let data = line(&[0.0, 1.0], &[1, -1]);
        let p = nearest_pair(&[0.25], &data).unwrap();
        assert_eq!((p.interior_dist, p.exterior_dist, p.n_interior, p.n_exterior), (0.25, 0.75, 1, 1));
        assert_eq!(nearest_pair(&[0.0], &data).unwrap().interior_dist, 0.0);
        assert!(nearest_pair(&[0.0], &line(&[0.0, 1.0], &[-1, -1])).is_err());
    }

    #[test]
    fn nearest_pair_matches_sorted_scan() {
        let data = disc_grid(300, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let t = [rng.random::<f64>(), rng.random::<f64>()];
            let mut all: Vec<(f64, Label)> = (0..data.len())
                .map(|i| (squared_distance(data.point(i), &t).sqrt(), data.labels()[i]))
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0));
            let first = |l| all.iter().find(|(_, x)| *x == l).unwrap().0;
            let p = nearest_pair(&t, &data).unwrap();
            assert_eq!(p.interior_dist, first(Label::Inside));
            assert_eq!(p.exterior_dist, first(Label::Outside));
        }
    }

    fn pair(int2: f64, ext2: f64, n_int: usize, n_ext: usize) -> NearestPair {
        NearestPair { interior_dist: int2.sqrt(), exterior_dist: ext2.sqrt(), n_interior: n_int, n_exterior: n_ext }
    }

    #[test]
    fn bound_examples() {
        let b = sigma_bound_interior(&pair(0.25, 1.0, 3, 10)).unwrap();
        assert!((b.upper_2sigma2 - 0.75 / 10f64.ln()).abs() < 1e-15);
        assert!((b.upper_2sigma2 - 0.32572).abs() < 1e-5);
        assert_eq!(b.source, BoundSource::Interior);
        assert!(sigma_bound_interior(&pair(0.25, 1.0, 3, 1)).unwrap().upper_2sigma2.is_infinite());
        assert!(matches!(sigma_bound_interior(&pair(0.5, 0.5, 3, 3)), Err(Error::EmptyInterval { .. })));

        let b = sigma_bound_exterior(&pair(1.0, 0.0, 3, 4)).unwrap();
        assert!((b.upper_2sigma2 - 0.91024).abs() < 1e-5);
        assert!(sigma_bound_exterior(&pair(1.0, 0.0, 1, 4)).unwrap().upper_2sigma2.is_infinite());
        assert!(sigma_bound_exterior(&pair(0.5, 0.5, 3, 3)).is_err());
    }

    #[test]
    fn admissible_examples() {
        // one +1 point at the probe, ten -1 points at distance 1
        let mut xs = vec![0.0];
        let mut ls = vec![1];
        for k in 0..10 {
            xs.push(if k % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + 1e-9 * k as f64));
            ls.push(-1);
        }
        let data = line(&xs, &ls);
        let s2 = admissible_sigma(&data, &[(vec![0.0], Label::Inside)]).unwrap();
        let expected = 0.5 * (1.0 / 10f64.ln());
        assert!((2.0 * s2 - expected).abs() < 1e-8);

        let data = line(&[0.0, 1.0], &[1, -1]);
        match admissible_sigma(&data, &[(vec![0.1], Label::Inside), (vec![0.5], Label::Inside)]) {
            Err(Error::EmptyInterval { probe, .. }) => assert_eq!(probe, Some(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn admissible_sigma_separates_probes_on_a_line() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let ls: Vec<i8> = xs.iter().map(|x| if *x < 0.5 { 1 } else { -1 }).collect();
        let data = line(&xs, &ls);
        let probes: Vec<(Vec<f64>, Label)> = [0.02, 0.2, 0.45, 0.49, 0.52, 0.7, 0.99]
            .iter()
            .map(|&t| (vec![t], Label::from_sign(0.5 - t)))
            .collect();
        let s2 = admissible_sigma(&data, &probes).unwrap();
        for (t, l) in &probes {
            assert_eq!(simplified_decision(&data, s2, t).unwrap(), *l);
        }
        // the training grid as its own probe set is always admissible
        let s2 = admissible_sigma(&data, &training_probes(&data)).unwrap();
        assert!(s2 > 0.0);
    }

    #[test]
    fn interior_distance_shrinks_along_nested_grids() {
        let t = [0.5, 0.52];
        let mut last = f64::INFINITY;
        for n in [100, 400, 1600, 6400] {
            let g = generate(SequenceKind::Sobol, &Hyperbox::unit(2).unwrap(), n).unwrap();
            let labels = g.points().iter().map(|p| Label::from_sign(0.09 - squared_distance(p, &[0.5, 0.5])));
            let data = LabeledGrid::new(g.clone(), labels.collect()).unwrap();
            let p = nearest_pair(&t, &data).unwrap();
            assert!(p.interior_dist <= last);
            // exterior points sit outside the disc, at least 0.28 away
            assert!(p.exterior_dist >= 0.3 - 0.02 - 1e-12);
            last = p.interior_dist;
        }
    }

    proptest! {
        #[test]
        fn dominance_inside_bound(
            near in 0.0f64..1.0, gap in 0.01f64..2.0, n_far in 2usize..10_000, frac in 0.01f64..0.999,
        ) {
            let far = (near * near + gap).sqrt();
            let p = NearestPair { interior_dist: near, exterior_dist: far, n_interior: 5, n_exterior: n_far };
            let b = sigma_bound_interior(&p).unwrap();
            prop_assert!(dominance_holds(&p, BoundSource::Interior, b.sigma2(frac)));
            prop_assert!(!dominance_holds(&p, BoundSource::Interior, b.sigma2(1.0 / frac)));
        }

        #[test]
        fn bounds_swap_with_labels(seed in any::<u64>()) {
            let data = disc_grid(60, seed);
            let flipped = data.flipped();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = [rng.random::<f64>(), rng.random::<f64>()];
            let a = nearest_pair(&t, &data).unwrap();
            let b = nearest_pair(&t, &flipped).unwrap();
            prop_assert_eq!(a.interior_dist, b.exterior_dist);
            let ia = sigma_bound_interior(&a).map(|s| s.upper_2sigma2).ok();
            let eb = sigma_bound_exterior(&b).map(|s| s.upper_2sigma2).ok();
            prop_assert_eq!(ia, eb);
        }

        #[test]
        fn auto_sigma_is_small(seed in any::<u64>()) {
            let data = disc_grid(80, seed);
            prop_assume!(data.has_both_classes());
            let p = auto_sigma(&data).unwrap();
            let md = min_pairwise_distance(data.grid().points()).unwrap();
            prop_assert!(p.sigma2.sqrt() < md);
            prop_assert!(p.c > c_lower_bound(data.outside_count(), data.inside_count()).unwrap());
        }
    }
}
