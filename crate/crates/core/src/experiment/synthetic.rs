use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{as_string, grid_size_rule, GridSizeRule};
use crate::criterion::{label_grid, Label, SyntheticCriterion, SyntheticRegion};
use crate::error::{Error, Result};
use crate::grid::{generate, smallest_enclosing_box, Hyperbox, SequenceKind};
use crate::svm::{batch_predict, train, TrainedClassifier};
use crate::tuning::Tuning;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Sample size behind the estimated region.
    pub n: usize,
    #[serde(with = "as_string")]
    pub kind: SequenceKind,
    /// Overrides `round(500 ln n)`.
    pub grid_size: Option<usize>,
    /// Overrides the `0.2 * diameter / sqrt(n)` noise.
    pub noise_scale: Option<f64>,
    pub region: SyntheticRegion,
    pub tuning: Tuning,
    /// Size of the independent Monte Carlo grid scored against the truth.
    pub eval_count: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 5000,
            kind: SequenceKind::MonteCarlo { seed: 1 },
            grid_size: None,
            noise_scale: None,
            region: SyntheticRegion::disc_and_holed_ellipse(),
            tuning: Tuning::Auto,
            eval_count: 10_000,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("bad synthetic config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("<unprintable config: {e}>"))
    }

    pub fn grid_size(&self) -> Result<usize> {
        match self.grid_size {
            Some(0) => Err(Error::invalid("grid size must be >= 1")),
            Some(s) => Ok(s),
            None => grid_size_rule(GridSizeRule::LogLinear, self.n),
        }
    }
}

/// Which labels a prediction is scored against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    Estimated,
    Truth,
}

/// Outcome of one prediction. A red cross is a point predicted inside that
/// is outside; a blue cross is the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    InsideCorrect,
    OutsideCorrect,
    RedCross,
    BlueCross,
}

impl ErrorClass {
    pub fn of(reference: Label, predicted: Label) -> ErrorClass {
        match (reference, predicted) {
            (Label::Inside, Label::Inside) => ErrorClass::InsideCorrect,
            (Label::Outside, Label::Outside) => ErrorClass::OutsideCorrect,
            (Label::Outside, Label::Inside) => ErrorClass::RedCross,
            (Label::Inside, Label::Outside) => ErrorClass::BlueCross,
        }
    }

    pub fn is_error(self) -> bool {
        matches!(self, ErrorClass::RedCross | ErrorClass::BlueCross)
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorClass::InsideCorrect => "inside-correct",
            ErrorClass::OutsideCorrect => "outside-correct",
            ErrorClass::RedCross => "red-cross",
            ErrorClass::BlueCross => "blue-cross",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub estimated: Label,
    pub truth: Label,
    pub predicted: Label,
}

impl PointRecord {
    pub fn reference(&self, r: Reference) -> Label {
        match r {
            Reference::Estimated => self.estimated,
            Reference::Truth => self.truth,
        }
    }

    pub fn class(&self, r: Reference) -> ErrorClass {
        ErrorClass::of(self.reference(r), self.predicted)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticReport {
    pub n: usize,
    pub grid_size: usize,
    pub noise_scale: f64,
    pub sigma2: f64,
    pub c: f64,
    pub support_vectors: usize,
    pub inside_count: usize,
    /// Grid predictions against the labels the classifier was trained on.
    pub training_accuracy: f64,
    /// Grid predictions against the true region.
    pub true_accuracy: f64,
    /// Mean distance from misclassified grid points to the true boundary.
    pub mean_error_distance: f64,
    /// `sqrt(area / grid_size)`.
    pub spacing: f64,
    /// Grid points predicted inside, per true component.
    pub component_hits: Vec<usize>,
    pub eval_size: usize,
    pub eval_accuracy: f64,
    pub inside_box: Option<Hyperbox>,
    pub train_seconds: f64,
    pub predict_seconds: f64,
}

impl SyntheticReport {
    /// `field,value` rows; timings come last.
    pub fn to_csv(&self) -> String {
        let b = |v: &Option<Hyperbox>| v.as_ref().map_or("none".to_string(), |b| b.to_string());
        let hits: Vec<String> = self.component_hits.iter().map(|h| h.to_string()).collect();
        [
            ("n", self.n.to_string()),
            ("grid_size", self.grid_size.to_string()),
            ("noise_scale", self.noise_scale.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("c", self.c.to_string()),
            ("support_vectors", self.support_vectors.to_string()),
            ("inside_count", self.inside_count.to_string()),
            ("training_accuracy", self.training_accuracy.to_string()),
            ("true_accuracy", self.true_accuracy.to_string()),
            ("mean_error_distance", self.mean_error_distance.to_string()),
            ("spacing", self.spacing.to_string()),
            ("component_hits", hits.join(" ")),
            ("eval_size", self.eval_size.to_string()),
            ("eval_accuracy", self.eval_accuracy.to_string()),
            ("inside_box", format!("\"{}\"", b(&self.inside_box))),
            ("train_seconds", self.train_seconds.to_string()),
            ("predict_seconds", self.predict_seconds.to_string()),
        ]
        .iter()
        .fold(String::from("field,value\n"), |mut s, (k, v)| {
            s.push_str(&format!("{k},{v}\n"));
            s
        })
    }
}

pub struct SyntheticRun {
    pub report: SyntheticReport,
    pub records: Vec<PointRecord>,
    pub classifier: TrainedClassifier,
    pub bounds: Hyperbox,
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        hits as f64 / total as f64
    }
}

/// Labels a grid with a noisy estimate of the region, trains on it, and
/// scores the classifier against both the estimate and the exact region.
pub fn run_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticRun> {
    if cfg.region.components.is_empty() {
        return Err(Error::invalid("synthetic region has no components"));
    }
    let noise = cfg
        .noise_scale
        .unwrap_or_else(|| SyntheticCriterion::noise_for(&cfg.region, cfg.n.max(1)));
    let criterion = SyntheticCriterion::new(cfg.region.clone(), noise, cfg.seed)?;
    let bounds = SyntheticRegion::unit_box();
    let size = cfg.grid_size()?;
    let grid = generate(cfg.kind, &bounds, size)?;
    let data = label_grid(&criterion, &grid)?;
    if !data.has_both_classes() {
        return Err(Error::DegenerateTraining(format!(
            "the estimated region labels all {size} grid points alike ({} inside); config:\n{}",
            data.inside_count(),
            cfg.to_toml()
        )));
    }
    let params = cfg.tuning.resolve(&data)?;
    let start = Instant::now();
    let clf = train(&data, params)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let predicted = batch_predict(&clf, grid.points())?;
    let predict_seconds = start.elapsed().as_secs_f64();

    let truth = &cfg.region;
    let records: Vec<PointRecord> = grid
        .points()
        .iter()
        .zip(data.labels().iter().zip(&predicted))
        .map(|(p, (&estimated, &predicted))| PointRecord {
            point: p.to_vec(),
            estimated,
            truth: if truth.contains(p) { Label::Inside } else { Label::Outside },
            predicted,
        })
        .collect();

    let count = |r: Reference| records.iter().filter(|x| !x.class(r).is_error()).count();
    let errors: Vec<f64> = records
        .iter()
        .filter(|x| x.class(Reference::Truth).is_error())
        .map(|x| truth.boundary_distance(&x.point))
        .collect();
    let mean_error_distance =
        if errors.is_empty() { 0.0 } else { errors.iter().sum::<f64>() / errors.len() as f64 };
    let mut component_hits = vec![0; truth.components.len()];
    for r in records.iter().filter(|r| r.predicted == Label::Inside) {
        if let Some(c) = truth.component_of(&r.point) {
            component_hits[c] += 1;
        }
    }
    let inside_box = smallest_enclosing_box(
        records.iter().filter(|r| r.predicted == Label::Inside).map(|r| r.point.as_slice()),
    )
    .ok();

    let (eval_size, eval_accuracy) = if cfg.eval_count > 0 {
        let eval = generate(SequenceKind::MonteCarlo { seed: cfg.seed ^ 0x5eed_e7a1 }, &bounds, cfg.eval_count)?;
        let pred = batch_predict(&clf, eval.points())?;
        let ok = eval
            .points()
            .iter()
            .zip(&pred)
            .filter(|(p, l)| Label::from_sign(-truth.level(p)) == **l)
            .count();
        (cfg.eval_count, fraction(ok, cfg.eval_count))
    } else {
        (0, 1.0)
    };

    let report = SyntheticReport {
        n: cfg.n,
        grid_size: size,
        noise_scale: noise,
        sigma2: params.sigma2,
        c: params.c,
        support_vectors: clf.support_count(),
        inside_count: data.inside_count(),
        training_accuracy: fraction(count(Reference::Estimated), records.len()),
        true_accuracy: fraction(count(Reference::Truth), records.len()),
        mean_error_distance,
        spacing: bounds.spacing(size),
        component_hits,
        eval_size,
        eval_accuracy,
        inside_box,
        train_seconds,
        predict_seconds,
    };
    Ok(SyntheticRun { report, records, classifier: clf, bounds })
}

pub fn write_point_csv<W: Write>(mut w: W, records: &[PointRecord]) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.point.len());
    let cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "{},estimated,true,predicted,class_estimated,class_true", cols.join(","))?;
    for r in records {
        let coords: Vec<String> = r.point.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            coords.join(","),
            r.estimated,
            r.truth,
            r.predicted,
            r.class(Reference::Estimated),
            r.class(Reference::Truth)
        )?;
    }
    w.flush()?;
    Ok(())
}
