//! Planar test regions with a known boundary and a noisy "estimated" copy
//! whose noise shrinks with the sample size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_dim, Criterion};
use crate::error::{Error, Result};
use crate::grid::Hyperbox;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Disc { center: [f64; 2], radius: f64 },
    Ellipse { center: [f64; 2], semi_axes: [f64; 2] },
    /// L1 ball.
    Diamond { center: [f64; 2], radius: f64 },
}

impl Shape {
    /// Negative strictly inside, zero on the boundary, positive outside.
    pub fn level(&self, p: &[f64]) -> f64 {
        match self {
            Shape::Disc { center, radius } => {
                ((p[0] - center[0]).hypot(p[1] - center[1])) / radius - 1.0
            }
            Shape::Ellipse { center, semi_axes } => {
                ((p[0] - center[0]) / semi_axes[0]).hypot((p[1] - center[1]) / semi_axes[1]) - 1.0
            }
            Shape::Diamond { center, radius } => {
                ((p[0] - center[0]).abs() + (p[1] - center[1]).abs()) / radius - 1.0
            }
        }
    }

    /// Euclidean distance from `p` to the shape's boundary curve.
    pub fn boundary_distance(&self, p: &[f64]) -> f64 {
        match self {
            Shape::Disc { center, radius } => {
                ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs()
            }
            Shape::Ellipse { center, semi_axes } => {
                ellipse_distance(p[0] - center[0], p[1] - center[1], semi_axes[0], semi_axes[1])
            }
            Shape::Diamond { center, radius } => {
                let v = [
                    [center[0] + radius, center[1]],
                    [center[0], center[1] + radius],
                    [center[0] - radius, center[1]],
                    [center[0], center[1] - radius],
                ];
                (0..4).map(|i| segment_distance(p, v[i], v[(i + 1) % 4])).fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn extent(&self) -> ([f64; 2], [f64; 2]) {
        let (c, r) = match self {
            Shape::Disc { center, radius } | Shape::Diamond { center, radius } => {
                (*center, [*radius, *radius])
            }
            Shape::Ellipse { center, semi_axes } => (*center, *semi_axes),
        };
        ([c[0] - r[0], c[1] - r[1]], [c[0] + r[0], c[1] + r[1]])
    }

    fn perturbed(&self, scale: f64, rng: &mut ChaCha8Rng) -> Shape {
        let mut z = || -> f64 { StandardNormal.sample(rng) };
        let size = |s: f64, z: f64| (s + scale * z).max(0.2 * s);
        match self {
            Shape::Disc { center, radius } => Shape::Disc {
                center: [center[0] + scale * z(), center[1] + scale * z()],
                radius: size(*radius, z()),
            },
            Shape::Ellipse { center, semi_axes } => Shape::Ellipse {
                center: [center[0] + scale * z(), center[1] + scale * z()],
                semi_axes: [size(semi_axes[0], z()), size(semi_axes[1], z())],
            },
            Shape::Diamond { center, radius } => Shape::Diamond {
                center: [center[0] + scale * z(), center[1] + scale * z()],
                radius: size(*radius, z()),
            },
        }
    }
}

/// A shape with holes cut out of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub shape: Shape,
    #[serde(default)]
    pub holes: Vec<Shape>,
}

impl Component {
    fn level(&self, p: &[f64]) -> f64 {
        self.holes.iter().fold(self.shape.level(p), |acc, h| acc.max(-h.level(p)))
    }
}

/// Union of components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRegion {
    pub components: Vec<Component>,
}

impl SyntheticRegion {
    /// A disc, and separately an ellipse with two diamonds removed, inside
    /// the unit square. The two components are disjoint and every hole lies
    /// strictly inside its ellipse.
    pub fn disc_and_holed_ellipse() -> Self {
        SyntheticRegion {
            components: vec![
                Component { shape: Shape::Disc { center: [0.25, 0.7], radius: 0.15 }, holes: vec![] },
                Component {
                    shape: Shape::Ellipse { center: [0.65, 0.35], semi_axes: [0.25, 0.15] },
                    holes: vec![
                        Shape::Diamond { center: [0.55, 0.35], radius: 0.06 },
                        Shape::Diamond { center: [0.75, 0.35], radius: 0.06 },
                    ],
                },
            ],
        }
    }

    pub fn unit_box() -> Hyperbox {
        Hyperbox::unit(2).expect("unit square")
    }

    /// Negative inside the region.
    pub fn level(&self, p: &[f64]) -> f64 {
        self.components.iter().map(|c| c.level(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.level(p) < 0.0
    }

    /// Index of the component containing `p`.
    pub fn component_of(&self, p: &[f64]) -> Option<usize> {
        self.components.iter().position(|c| c.level(p) < 0.0)
    }

    /// Distance to the nearest piece of any shape boundary. Equals the
    /// distance to the region boundary when components are disjoint and
    /// holes lie strictly inside their shapes.
    pub fn boundary_distance(&self, p: &[f64]) -> f64 {
        self.components
            .iter()
            .flat_map(|c| std::iter::once(&c.shape).chain(&c.holes))
            .map(|s| s.boundary_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Diagonal of the bounding box of all components.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.components {
            let (l, h) = c.shape.extent();
            for i in 0..2 {
                lo[i] = lo[i].min(l[i]);
                hi[i] = hi[i].max(h[i]);
            }
        }
        (hi[0] - lo[0]).hypot(hi[1] - lo[1])
    }

    /// Every shape shifted and resized by independent `N(0, scale^2)` draws.
    pub fn perturbed(&self, scale: f64, seed: u64) -> SyntheticRegion {
        if scale == 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SyntheticRegion {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    shape: c.shape.perturbed(scale, &mut rng),
                    holes: c.holes.iter().map(|h| h.perturbed(scale, &mut rng)).collect(),
                })
                .collect(),
        }
    }
}

/// Labels points by a noisy estimate of a true region.
#[derive(Clone, Debug)]
pub struct SyntheticCriterion {
    truth: SyntheticRegion,
    estimate: SyntheticRegion,
    noise_scale: f64,
}

impl SyntheticCriterion {
    pub fn new(truth: SyntheticRegion, noise_scale: f64, seed: u64) -> Result<Self> {
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(Error::invalid(format!("noise scale must be >= 0, got {noise_scale}")));
        }
        if truth.components.is_empty() {
            return Err(Error::invalid("region needs at least one component"));
        }
        let estimate = truth.perturbed(noise_scale, seed);
        Ok(SyntheticCriterion { truth, estimate, noise_scale })
    }

    /// Noise `c / sqrt(n)` with `c = 0.2 * diameter`, vanishing as n grows.
    pub fn for_sample_size(truth: SyntheticRegion, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sample size must be >= 1"));
        }
        let scale = Self::noise_for(&truth, n);
        SyntheticCriterion::new(truth, scale, seed)
    }

    pub fn noise_for(truth: &SyntheticRegion, n: usize) -> f64 {
        0.2 * truth.diameter() / (n as f64).sqrt()
    }

    pub fn truth(&self) -> &SyntheticRegion {
        &self.truth
    }

    pub fn estimate(&self) -> &SyntheticRegion {
        &self.estimate
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }
}

impl Criterion for SyntheticCriterion {
    fn dim(&self) -> usize {
        2
    }

    fn statistic(&self, theta: &[f64]) -> Result<f64> {
        check_dim(2, theta)?;
        Ok(self.estimate.level(theta))
    }

    fn threshold(&self) -> f64 {
        0.0
    }
}

fn segment_distance(p: &[f64], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Distance from `(x, y)` to the ellipse `(u/a)^2 + (v/b)^2 = 1`: coarse
/// scan over the angle, then golden-section refinement.
fn ellipse_distance(x: f64, y: f64, a: f64, b: f64) -> f64 {
    let d2 = |t: f64| (x - a * t.cos()).powi(2) + (y - b * t.sin()).powi(2);
    const SAMPLES: usize = 256;
    let step = std::f64::consts::TAU / SAMPLES as f64;
    let best = (0..SAMPLES)
        .map(|i| i as f64 * step)
        .min_by(|s, t| d2(*s).total_cmp(&d2(*t)))
        .unwrap_or(0.0);
    let (mut lo, mut hi) = (best - step, best + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if d2(m1) < d2(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    d2(0.5 * (lo + hi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::Label;

    #[test]
    fn default_region_membership() {
        let r = SyntheticRegion::disc_and_holed_ellipse();
        assert!(r.contains(&[0.25, 0.7]));
        assert!(r.contains(&[0.65, 0.35]));
        assert!(!r.contains(&[0.55, 0.35]), "inside a diamond hole");
        assert!(!r.contains(&[0.75, 0.35]), "inside a diamond hole");
        assert!(!r.contains(&[0.1, 0.1]));
        assert_eq!(r.component_of(&[0.25, 0.7]), Some(0));
        assert_eq!(r.component_of(&[0.65, 0.25]), Some(1));
        assert_eq!(r.component_of(&[0.9, 0.9]), None);
    }

    #[test]
    fn zero_noise_matches_truth() {
        let truth = SyntheticRegion::disc_and_holed_ellipse();
        let c = SyntheticCriterion::new(truth.clone(), 0.0, 9).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let p = [i as f64 / 49.0, j as f64 / 49.0];
                let expected = if truth.contains(&p) { Label::Inside } else { Label::Outside };
                assert_eq!(c.label(&p).unwrap(), expected);
            }
        }
    }

    #[test]
    fn noise_shrinks_with_sample_size() {
        let truth = SyntheticRegion::disc_and_holed_ellipse();
        let small = SyntheticCriterion::for_sample_size(truth.clone(), 50, 1).unwrap();
        let large = SyntheticCriterion::for_sample_size(truth, 5000, 1).unwrap();
        assert!(large.noise_scale() < small.noise_scale());
        assert!((small.noise_scale() / large.noise_scale() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn distances_to_simple_boundaries() {
        let disc = Shape::Disc { center: [0.0, 0.0], radius: 1.0 };
        assert!((disc.boundary_distance(&[0.25, 0.0]) - 0.75).abs() < 1e-15);
        let diamond = Shape::Diamond { center: [0.0, 0.0], radius: 1.0 };
        assert!((diamond.boundary_distance(&[0.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((diamond.boundary_distance(&[2.0, 0.0]) - 1.0).abs() < 1e-12);
        let ellipse = Shape::Ellipse { center: [0.0, 0.0], semi_axes: [2.0, 1.0] };
        assert!((ellipse.boundary_distance(&[0.0, 0.0]) - 1.0).abs() < 1e-9);
        assert!((ellipse.boundary_distance(&[3.0, 0.0]) - 1.0).abs() < 1e-9);
        assert!((ellipse.boundary_distance(&[0.0, 1.5]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn level_sign_agrees_with_boundary_distance() {
        let r = SyntheticRegion::disc_and_holed_ellipse();
        let p = [0.25 + 0.15, 0.7];
        assert!(r.boundary_distance(&p) < 1e-12);
        assert!(r.level(&p).abs() < 1e-12);
    }
}
