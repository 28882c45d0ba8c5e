use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower_1, upper_1] x ... x [lower_d, upper_d]` with
/// `lower_i < upper_i` in every dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct Hyperbox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for Hyperbox {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        Hyperbox::new(raw.lower, raw.upper)
    }
}

impl From<Hyperbox> for RawBox {
    fn from(b: Hyperbox) -> Self {
        RawBox { lower: b.lower, upper: b.upper }
    }
}

impl Hyperbox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("box must have at least one dimension"));
        }
        if lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "box bounds have different lengths ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("box bound {i} is not finite")));
            }
            if lo >= hi {
                return Err(Error::invalid(format!(
                    "box dimension {i} requires lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Hyperbox { lower, upper })
    }

    /// The unit cube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Hyperbox::new(vec![0.0; dim], vec![1.0; dim])
    }

    /// The cube `center +/- half_width` in every coordinate.
    pub fn centered(center: &[f64], half_width: f64) -> Result<Self> {
        Hyperbox::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn contains_box(&self, other: &Hyperbox) -> bool {
        other.dim() == self.dim()
            && (0..self.dim())
                .all(|i| self.lower[i] <= other.lower[i] && other.upper[i] <= self.upper[i])
    }

    /// Affine image of a unit-cube point.
    pub fn map_unit(&self, unit: &[f64], out: &mut [f64]) {
        for i in 0..self.dim() {
            out[i] = self.lower[i] + unit[i] * self.width(i);
        }
    }

    /// Geometric mean spacing of `count` points spread evenly over the box.
    pub fn spacing(&self, count: usize) -> f64 {
        (self.volume() / count as f64).powf(1.0 / self.dim() as f64)
    }
}

impl fmt::Display for Hyperbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", self.lower[i], self.upper[i])?;
        }
        Ok(())
    }
}

/// Parses `lo:hi,lo:hi,...`.
impl FromStr for Hyperbox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for part in s.split(',') {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("expected lo:hi, got {part:?}")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad box bound {v:?}: {e}")))
            };
            lower.push(parse(lo)?);
            upper.push(parse(hi)?);
        }
        Hyperbox::new(lower, upper)
    }
}
