//! End-to-end studies: the synthetic two-region study, the OLS coverage
//! table, and dense-grid classification with a saved classifier.

mod dense;
mod ols;
mod spec;
mod svg;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use dense::{classify_dense, DenseReport};
pub use ols::{run_ols, write_ols_csv, OlsConfig, OlsReport, OlsRow};
pub use spec::CriterionSpec;
pub use svg::write_svg;
pub use synthetic::{
    run_synthetic, write_point_csv, ErrorClass, PointRecord, Reference, SyntheticConfig,
    SyntheticReport, SyntheticRun,
};

use crate::error::{Error, Result};

/// Grid cardinality as a function of the sample size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSizeRule {
    /// `round(500 ln n)`
    LogLinear,
    /// `round(6^(ln n))`
    LogExponential,
}

pub fn grid_size_rule(rule: GridSizeRule, n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::invalid(format!("grid size rules need n >= 2, got {n}")));
    }
    let ln = (n as f64).ln();
    let size = match rule {
        GridSizeRule::LogLinear => 500.0 * ln,
        GridSizeRule::LogExponential => 6f64.powf(ln),
    };
    Ok(size.round() as usize)
}

/// Serde adapter for types that round-trip through `Display`/`FromStr`.
pub(crate) mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}
