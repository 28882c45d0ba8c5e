use std::time::Instant;

use crate::criterion::Label;
use crate::error::Result;
use crate::grid::{smallest_enclosing_box, Grid, Hyperbox};
use crate::svm::{batch_predict, Predictor, TrainedClassifier};

#[derive(Clone, Debug)]
pub struct DenseReport {
    pub labels: Vec<Label>,
    pub inside_count: usize,
    /// Smallest box around the points predicted inside; `None` when fewer
    /// than two such points span every dimension.
    pub inside_box: Option<Hyperbox>,
    /// The grid reaches outside the classifier's training box.
    pub extrapolated: bool,
    pub seconds: f64,
    pub seconds_per_point: f64,
}

pub fn classify_dense(clf: &TrainedClassifier, grid: &Grid) -> Result<DenseReport> {
    let extrapolated = !clf.bounds().contains_box(grid.bounds());
    if extrapolated {
        log::warn!(
            "grid box {} leaves the training box {}; far from the training data the prediction is the sign of the bias",
            grid.bounds(),
            clf.bounds()
        );
    }
    crate::criterion::check_dim(clf.dim(), grid.bounds().lower())?;
    let start = Instant::now();
    let labels = batch_predict(clf, grid.points())?;
    let seconds = start.elapsed().as_secs_f64();
    let inside: Vec<&[f64]> = grid
        .points()
        .iter()
        .zip(&labels)
        .filter(|(_, l)| **l == Label::Inside)
        .map(|(p, _)| p)
        .collect();
    let inside_box = smallest_enclosing_box(inside.iter().copied()).ok();
    Ok(DenseReport {
        inside_count: inside.len(),
        labels,
        inside_box,
        extrapolated,
        seconds,
        seconds_per_point: seconds / grid.count().max(1) as f64,
    })
}
