//! Boundary refinement: insert midpoints between nearby points of opposite
//! labels so the training grid is densest where the classes meet.
//!
//! Points inserted during an iteration join the neighbor search only from
//! the next iteration on.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::criterion::{Criterion, Label, LabeledGrid};
use crate::error::{Error, Result};
use crate::grid::{squared_distance, Points};

#[derive(Clone, Debug, PartialEq)]
pub struct RefineConfig {
    pub radius: f64,
    pub max_iterations: usize,
    /// Cap on the total point count, input included.
    pub point_budget: usize,
    /// Midpoints closer than this to an existing point are skipped.
    pub min_insert_distance: f64,
}

impl RefineConfig {
    /// Five iterations, no budget, `min_insert_distance = 1e-3 * radius`.
    pub fn new(radius: f64) -> Self {
        RefineConfig {
            radius,
            max_iterations: 5,
            point_budget: usize::MAX,
            min_insert_distance: 1e-3 * radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("radius must be positive, got {}", self.radius)));
        }
        if self.max_iterations == 0 || self.point_budget == 0 {
            return Err(Error::invalid("max_iterations and point_budget must be >= 1"));
        }
        if !(self.min_insert_distance > 0.0 && self.min_insert_distance <= self.radius) {
            return Err(Error::invalid("min_insert_distance must lie in (0, radius]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub data: LabeledGrid,
    /// The point budget ran out while midpoints were still pending.
    pub truncated: bool,
    pub iterations: usize,
    pub inserted: usize,
}

/// Uniform hash grid with cell side `cell`.
struct SpatialHash {
    cell: f64,
    dim: usize,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl SpatialHash {
    fn new(cell: f64, dim: usize) -> Self {
        SpatialHash { cell, dim, cells: HashMap::new() }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|x| (x / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, index: usize, p: &[f64]) {
        self.cells.entry(self.key(p)).or_default().push(index);
    }

    /// Calls `f` on every stored index in the 3^d cells around `p`.
    fn for_each_near(&self, p: &[f64], mut f: impl FnMut(usize)) {
        let base = self.key(p);
        let mut offset = vec![-1i64; self.dim];
        let mut key = base.clone();
        loop {
            for k in 0..self.dim {
                key[k] = base[k] + offset[k];
            }
            if let Some(v) = self.cells.get(&key) {
                v.iter().for_each(|&i| f(i));
            }
            // odometer over {-1, 0, 1}^d
            let mut k = 0;
            while k < self.dim && offset[k] == 1 {
                offset[k] = -1;
                k += 1;
            }
            if k == self.dim {
                break;
            }
            offset[k] += 1;
        }
    }
}

fn build_hash(points: &Points, cell: f64) -> SpatialHash {
    let mut h = SpatialHash::new(cell, points.dim());
    for (i, p) in points.iter().enumerate() {
        h.insert(i, p);
    }
    h
}

/// Unordered pairs `(i, j)`, `i < j`, closer than `radius` (inclusive) with
/// opposite labels, sorted lexicographically.
pub fn boundary_pairs(data: &LabeledGrid, radius: f64) -> Vec<(usize, usize)> {
    if !(radius > 0.0) || data.is_empty() {
        return Vec::new();
    }
    let pts = data.grid().points();
    let hash = build_hash(pts, radius);
    let r2 = radius * radius;
    let labels = data.labels();
    (0..data.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut mine = Vec::new();
            hash.for_each_near(pts.row(i), |j| {
                if j > i && labels[j] != labels[i] && squared_distance(pts.row(i), pts.row(j)) <= r2 {
                    mine.push((i, j));
                }
            });
            mine.sort_unstable();
            mine.into_iter()
        })
        .collect()
}

fn check_isolated(pts: &Points, hash: &SpatialHash, radius: f64) -> Result<()> {
    let r2 = radius * radius;
    let isolated = (0..pts.len()).into_par_iter().find_first(|&i| {
        let mut found = false;
        hash.for_each_near(pts.row(i), |j| {
            found |= j != i && squared_distance(pts.row(i), pts.row(j)) <= r2;
        });
        !found
    });
    match isolated {
        Some(index) => Err(Error::IsolatedPoint { index, radius }),
        None => Ok(()),
    }
}

pub fn refine<C: Criterion + ?Sized>(
    data: &LabeledGrid,
    criterion: &C,
    config: &RefineConfig,
) -> Result<RefineOutcome> {
    config.validate()?;
    if data.dim() != criterion.dim() {
        return Err(Error::invalid(format!(
            "grid has dimension {}, criterion expects {}",
            data.dim(),
            criterion.dim()
        )));
    }
    if !data.has_both_classes() {
        return Err(Error::DegenerateTraining("refinement needs both classes present".into()));
    }
    let pts = data.grid().points();
    let mut hash = build_hash(pts, config.radius);
    check_isolated(pts, &hash, config.radius)?;

    let mut out = data.clone();
    let min2 = config.min_insert_distance * config.min_insert_distance;
    let (mut iterations, mut inserted, mut truncated) = (0, 0, false);
    let dim = data.dim();
    while iterations < config.max_iterations && !truncated {
        iterations += 1;
        let pairs = boundary_pairs(&out, config.radius);
        let mut fresh = Points::new(dim);
        let mut mid = vec![0.0; dim];
        for (i, j) in pairs {
            let (a, b) = (out.point(i), out.point(j));
            for k in 0..dim {
                mid[k] = 0.5 * (a[k] + b[k]);
            }
            let mut crowded = false;
            hash.for_each_near(&mid, |t| {
                let q = if t < out.len() { out.point(t) } else { fresh.row(t - out.len()) };
                crowded |= squared_distance(q, &mid) < min2;
            });
            if crowded {
                continue;
            }
            if out.len() + fresh.len() >= config.point_budget {
                truncated = true;
                break;
            }
            hash.insert(out.len() + fresh.len(), &mid);
            fresh.push(&mid)?;
        }
        if fresh.is_empty() {
            break;
        }
        let base = out.len();
        let labels: Vec<Result<Label>> =
            (0..fresh.len()).into_par_iter().map(|k| criterion.label(fresh.row(k))).collect();
        for (k, (p, l)) in fresh.iter().zip(labels).enumerate() {
            let l = l.map_err(|e| Error::PointEvaluation { index: base + k, source: Box::new(e) })?;
            out.push(p, l)?;
        }
        inserted += fresh.len();
        log::debug!("refine iteration {iterations}: {} points inserted", fresh.len());
    }
    Ok(RefineOutcome { data: out, truncated, iterations, inserted })
}
