//! ROC analysis, confusion metrics and cross-validated cutoff selection.
//!
//! Every operating point uses the rule `score ≥ cutoff → positive`.

mod confusion;
mod cutoff;
mod export;
mod roc;

use thiserror::Error;

pub use confusion::{confusion_at, ConfusionMetrics};
pub use cutoff::{select_cutoff_cv, stratified_folds, CutoffSelection, FoldYouden};
pub use export::{roc_csv, roc_svg, write_roc_csv};
pub use roc::{mann_whitney_auc, roc_curve, RocCurve, RocPoint};

use crate::gbt::GbtError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{scores} scores for {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("need n_folds ≥ 2, got {0}")]
    BadFolds(usize),
    #[error("class with {count} rows cannot cover {n_folds} folds; use fewer folds")]
    TooFewForFolds { count: usize, n_folds: usize },
    #[error(transparent)]
    Gbt(#[from] GbtError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::Length { scores: scores.len(), labels: labels.len() });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}
