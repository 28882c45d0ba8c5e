use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sobol::{self, Sobol};
use crate::error::{Error, Result};

/// Which equidistributed sequence a grid is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    MonteCarlo { seed: u64 },
    Sobol,
    Weyl,
    Baker,
}

impl SequenceKind {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, SequenceKind::MonteCarlo { .. })
    }
}

impl Default for SequenceKind {
    fn default() -> Self {
        SequenceKind::Sobol
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceKind::MonteCarlo { seed } => write!(f, "montecarlo:{seed}"),
            SequenceKind::Sobol => f.write_str("sobol"),
            SequenceKind::Weyl => f.write_str("weyl"),
            SequenceKind::Baker => f.write_str("baker"),
        }
    }
}

/// Accepts `sobol`, `weyl`, `baker`, `montecarlo` and `montecarlo:<seed>`.
impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        match (name, arg) {
            ("sobol", None) => Ok(SequenceKind::Sobol),
            ("weyl", None) => Ok(SequenceKind::Weyl),
            ("baker", None) => Ok(SequenceKind::Baker),
            ("montecarlo" | "mc", None) => Ok(SequenceKind::MonteCarlo { seed: 0 }),
            ("montecarlo" | "mc", Some(seed)) => seed
                .parse()
                .map(|seed| SequenceKind::MonteCarlo { seed })
                .map_err(|e| Error::invalid(format!("bad Monte Carlo seed {seed:?}: {e}"))),
            _ => Err(Error::invalid(format!("unknown sequence kind {s:?}"))),
        }
    }
}

/// Random-access generator of unit-cube terms. Term `n` (0-based) does not
/// depend on how many terms were requested, which is what makes grids
/// prefix-stable.
pub(crate) enum UnitSequence {
    MonteCarlo { seed: u64, dim: usize },
    Sobol(Sobol),
    Fractional(Vec<SplitConstant>),
}

impl UnitSequence {
    pub(crate) fn new(kind: SequenceKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sequence dimension must be >= 1"));
        }
        Ok(match kind {
            SequenceKind::MonteCarlo { seed } => UnitSequence::MonteCarlo { seed, dim },
            SequenceKind::Sobol => {
                if dim > sobol::MAX_DIM {
                    return Err(Error::UnsupportedDimension { dim, max: sobol::MAX_DIM });
                }
                UnitSequence::Sobol(Sobol::new(dim))
            }
            SequenceKind::Weyl => UnitSequence::Fractional(
                primes(dim).into_iter().map(|p| SplitConstant::sqrt(p as f64)).collect(),
            ),
            SequenceKind::Baker => UnitSequence::Fractional(
                (1..=dim)
                    .map(|k| SplitConstant::plain((1.0 / (k as f64 + 1.0)).exp()))
                    .collect(),
            ),
        })
    }

    pub(crate) fn max_terms(&self) -> u64 {
        match self {
            UnitSequence::Sobol(_) => sobol::MAX_INDEX,
            // beyond 2^53 the term index is no longer exact in f64
            UnitSequence::Fractional(_) => 1u64 << 53,
            UnitSequence::MonteCarlo { .. } => u64::MAX / 4,
        }
    }

    pub(crate) fn term(&self, n: u64, out: &mut [f64]) {
        match self {
            UnitSequence::MonteCarlo { seed, dim } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                // each f64 consumes one u64, i.e. two 32-bit words of keystream
                rng.set_word_pos(n as u128 * *dim as u128 * 2);
                for x in out.iter_mut() {
                    *x = rng.random::<f64>();
                }
            }
            UnitSequence::Sobol(s) => s.point(n + 1, out),
            UnitSequence::Fractional(alphas) => {
                let k = (n + 1) as f64;
                for (a, x) in alphas.iter().zip(out.iter_mut()) {
                    *x = a.fract_mul(k);
                }
            }
        }
    }
}

/// An irrational multiplier stored as `hi + lo`, where `lo` carries the part
/// of the constant below the precision of `hi` when it is known.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SplitConstant {
    hi: f64,
    lo: f64,
}

impl SplitConstant {
    fn sqrt(p: f64) -> Self {
        let hi = p.sqrt();
        let residual = (-hi).mul_add(hi, p);
        SplitConstant { hi, lo: residual / (2.0 * hi) }
    }

    fn plain(hi: f64) -> Self {
        SplitConstant { hi, lo: 0.0 }
    }

    /// Fractional part of `k * (hi + lo)`. The rounding error of `k * hi` is
    /// recovered exactly with a fused multiply-add; accuracy degrades slowly
    /// with `k`, to roughly 1e-9 absolute at `k = 1e7`.
    fn fract_mul(&self, k: f64) -> f64 {
        let prod = k * self.hi;
        let err = k.mul_add(self.hi, -prod);
        let mut f = prod - prod.floor();
        f += err + k * self.lo;
        f - f.floor()
    }
}

/// The first `count` primes.
fn primes(count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while out.len() < count {
        if out.iter().take_while(|p| *p * *p <= candidate).all(|p| candidate % p != 0) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_are_primes() {
        assert_eq!(primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    // Fractional parts of n*sqrt(2) and n*exp(1/2), from 50-digit arithmetic.
    #[test]
    fn weyl_and_baker_match_high_precision() {
        let weyl = UnitSequence::new(SequenceKind::Weyl, 1).unwrap();
        let expected = [0.41421356237309504880, 0.82842712474619009760, 0.24264068711928514641];
        let mut x = [0.0];
        for (n, e) in expected.iter().enumerate() {
            weyl.term(n as u64, &mut x);
            assert!((x[0] - e).abs() < 1e-15, "weyl term {n}: {} vs {e}", x[0]);
        }
        let baker = UnitSequence::new(SequenceKind::Baker, 1).unwrap();
        let expected = [0.64872127070012814685, 0.2974425414002562937, 0.94616381210038444055];
        for (n, e) in expected.iter().enumerate() {
            baker.term(n as u64, &mut x);
            assert!((x[0] - e).abs() < 1e-15, "baker term {n}: {} vs {e}", x[0]);
        }
    }

    #[test]
    fn weyl_stays_accurate_for_long_sequences() {
        // frac(1e7 * sqrt(3)) from 50-digit arithmetic
        let weyl = UnitSequence::new(SequenceKind::Weyl, 2).unwrap();
        let mut x = [0.0; 2];
        weyl.term(10_000_000 - 1, &mut x);
        assert!((x[1] - 0.075688772935274463415).abs() < 1e-9);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("sobol".parse::<SequenceKind>().unwrap(), SequenceKind::Sobol);
        assert_eq!(
            "montecarlo:7".parse::<SequenceKind>().unwrap(),
            SequenceKind::MonteCarlo { seed: 7 }
        );
        assert!("halton".parse::<SequenceKind>().is_err());
        for k in [
            SequenceKind::Sobol,
            SequenceKind::Weyl,
            SequenceKind::Baker,
            SequenceKind::MonteCarlo { seed: 99 },
        ] {
            assert_eq!(k.to_string().parse::<SequenceKind>().unwrap(), k);
        }
    }

    #[test]
    fn sobol_dimension_limit() {
        assert!(matches!(
            UnitSequence::new(SequenceKind::Sobol, 17),
            Err(Error::UnsupportedDimension { dim: 17, max: 16 })
        ));
    }
}
