//! Equidistributed grids on boxes.
//!
//! A [`Grid`] holds the first `count` terms of one of four sequences mapped
//! affinely into a [`Hyperbox`]. Every generator is random-access by term
//! index, so growing a grid never disturbs the points already in it.

mod bounds;
mod points;
mod sequence;
mod sobol;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::Hyperbox;
pub use points::{distance, squared_distance, Points};
pub use sequence::SequenceKind;
pub use sobol::MAX_DIM as SOBOL_MAX_DIM;

use crate::error::{Error, Result};
use sequence::UnitSequence;

/// Ordered grid points inside a box.
///
/// The first `sequence_len` points are a prefix of the sequence named by
/// `kind`; any points after that were inserted by boundary refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    bounds: Hyperbox,
    kind: SequenceKind,
    points: Points,
    sequence_len: usize,
}

impl Grid {
    pub fn bounds(&self) -> &Hyperbox {
        &self.bounds
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Number of points, |S|.
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// Number of leading points that come straight from the sequence.
    pub fn sequence_len(&self) -> usize {
        self.sequence_len
    }

    pub fn is_refined(&self) -> bool {
        self.sequence_len != self.points.len()
    }

    /// Assemble a grid from parts, e.g. after reading it from disk. Every
    /// point must lie in `bounds`.
    pub fn from_parts(
        bounds: Hyperbox,
        kind: SequenceKind,
        points: Points,
        sequence_len: usize,
    ) -> Result<Self> {
        if points.dim() != bounds.dim() {
            return Err(Error::invalid(format!(
                "points have dimension {}, box has {}",
                points.dim(),
                bounds.dim()
            )));
        }
        if sequence_len > points.len() {
            return Err(Error::invalid("sequence length exceeds point count"));
        }
        if let Some(i) = points.iter().position(|p| !bounds.contains(p)) {
            return Err(Error::invalid(format!("point {i} lies outside the box {bounds}")));
        }
        Ok(Grid { bounds, kind, points, sequence_len })
    }

    /// Appends refinement points. They must lie inside the box.
    pub(crate) fn push_inserted(&mut self, point: &[f64]) -> Result<()> {
        if !self.bounds.contains(point) {
            return Err(Error::invalid("inserted point lies outside the grid box"));
        }
        self.points.push(point)
    }

    /// Keeps only the rows at `indices`; the result no longer claims to be a
    /// sequence prefix unless `indices` is exactly `0..k`.
    pub fn subset(&self, indices: &[usize]) -> Grid {
        let is_prefix = indices.iter().enumerate().all(|(k, &i)| k == i);
        let sequence_len = if is_prefix { indices.len().min(self.sequence_len) } else { 0 };
        Grid {
            bounds: self.bounds.clone(),
            kind: self.kind,
            points: self.points.select(indices),
            sequence_len,
        }
    }
}

/// First `count` terms of `kind` on `bounds`.
pub fn generate(kind: SequenceKind, bounds: &Hyperbox, count: usize) -> Result<Grid> {
    if count == 0 {
        return Err(Error::invalid("grid count must be >= 1"));
    }
    let sequence = UnitSequence::new(kind, bounds.dim())?;
    let points = terms(&sequence, bounds, 0, count)?;
    Ok(Grid { bounds: bounds.clone(), kind, points, sequence_len: count })
}

/// Grows `grid` to `new_count` sequence terms. The existing points are kept
/// bit-for-bit, so `S_n` is a subset of `S_{n+1}`.
pub fn extend(grid: &Grid, new_count: usize) -> Result<Grid> {
    if grid.is_refined() {
        return Err(Error::invalid("cannot extend a grid that contains refinement points"));
    }
    if new_count < grid.count() {
        return Err(Error::invalid(format!(
            "new count {new_count} is smaller than current count {}",
            grid.count()
        )));
    }
    let sequence = UnitSequence::new(grid.kind, grid.dim())?;
    let tail = terms(&sequence, &grid.bounds, grid.count(), new_count)?;
    let mut flat = Vec::with_capacity(new_count * grid.dim());
    flat.extend_from_slice(grid.points.as_flat());
    flat.extend_from_slice(tail.as_flat());
    Ok(Grid {
        bounds: grid.bounds.clone(),
        kind: grid.kind,
        points: Points::from_flat(grid.dim(), flat)?,
        sequence_len: new_count,
    })
}

fn terms(sequence: &UnitSequence, bounds: &Hyperbox, start: usize, end: usize) -> Result<Points> {
    if end as u64 > sequence.max_terms() {
        return Err(Error::invalid(format!(
            "sequence supports at most {} terms",
            sequence.max_terms()
        )));
    }
    let dim = bounds.dim();
    let mut flat = vec![0.0; (end - start) * dim];
    flat.par_chunks_mut(dim).enumerate().for_each(|(offset, out)| {
        let mut unit = [0.0; 32];
        let unit = if dim <= unit.len() { &mut unit[..dim] } else { &mut vec![0.0; dim][..] };
        sequence.term((start + offset) as u64, unit);
        bounds.map_unit(unit, out);
    });
    Points::from_flat(dim, flat)
}

/// Share of grid points that fall in `subbox`.
pub fn equidistribution_fraction(grid: &Grid, subbox: &Hyperbox) -> Result<f64> {
    if !grid.bounds.contains_box(subbox) {
        return Err(Error::invalid(format!(
            "sub-box {subbox} is not contained in grid box {}",
            grid.bounds
        )));
    }
    let inside = grid.points.iter().filter(|p| subbox.contains(p)).count();
    Ok(inside as f64 / grid.count() as f64)
}

/// Smallest Euclidean distance between two distinct points.
///
/// Sweeps points sorted by their first coordinate, so typical inputs cost far
/// less than the all-pairs scan. Identical points are an error.
pub fn min_pairwise_distance(points: &Points) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points.row(a)[0].total_cmp(&points.row(b)[0]));
    let mut best = f64::INFINITY;
    for (pos, &i) in order.iter().enumerate() {
        let pi = points.row(i);
        for &j in &order[pos + 1..] {
            let pj = points.row(j);
            let dx = pj[0] - pi[0];
            if dx * dx >= best {
                break;
            }
            let d2 = squared_distance(pi, pj);
            if d2 == 0.0 {
                return Err(Error::DuplicatePoint { first: i.min(j), second: i.max(j) });
            }
            best = best.min(d2);
        }
    }
    Ok(best.sqrt())
}

/// Componentwise min/max hull of a point set.
pub fn smallest_enclosing_box<'a, I>(points: I) -> Result<Hyperbox>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = points.into_iter();
    let first = iter.next().ok_or_else(|| Error::invalid("cannot bound an empty point set"))?;
    let mut lower = first.to_vec();
    let mut upper = first.to_vec();
    for p in iter {
        if p.len() != lower.len() {
            return Err(Error::invalid("points have mixed dimensions"));
        }
        for (i, x) in p.iter().enumerate() {
            lower[i] = lower[i].min(*x);
            upper[i] = upper[i].max(*x);
        }
    }
    if let Some(dim) = (0..lower.len()).find(|&i| lower[i] >= upper[i]) {
        return Err(Error::DegenerateBox { dim });
    }
    Hyperbox::new(lower, upper)
}
