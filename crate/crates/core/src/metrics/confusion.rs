use serde::{Deserialize, Serialize};

use super::{check_inputs, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub youden: f64,
}

impl ConfusionMetrics {
    /// Panics if either class is empty.
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        assert!(tp + fn_ > 0 && tn + fp > 0, "both classes must be present");
        let sensitivity = tp as f64 / (tp + fn_) as f64;
        let specificity = tn as f64 / (tn + fp) as f64;
        Self {
            tp,
            fp,
            tn,
            fn_,
            sensitivity,
            specificity,
            accuracy: (tp + tn) as f64 / (tp + fp + tn + fn_) as f64,
            youden: sensitivity + specificity - 1.0,
        }
    }
}

pub fn confusion_at(scores: &[f64], labels: &[bool], cutoff: f64) -> Result<ConfusionMetrics, MetricsError> {
    check_inputs(scores, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= cutoff, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(ConfusionMetrics::from_counts(tp, fp, tn, fn_))
}
