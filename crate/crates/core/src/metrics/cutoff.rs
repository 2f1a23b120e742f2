use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion_at, MetricsError};
use crate::gbt::{train_gbt, GbtParams};
use crate::matrix::FeatureMatrix;
use crate::rng::hash_pair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldYouden {
    pub fold: usize,
    pub youden: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSelection {
    pub threshold: f64,
    pub folds: Vec<FoldYouden>,
    /// Youden of all pooled out-of-fold scores at `threshold`.
    pub pooled_youden: f64,
    pub n_folds: usize,
    pub oof_scores: Vec<f64>,
}

/// Fold index per row. Within each class rows are ordered by a hash of
/// `(seed, row index)` and dealt round-robin, so every fold holds both
/// classes whenever each class has at least `n_folds` rows.
pub fn stratified_folds(labels: &[bool], n_folds: usize, seed: u64) -> Result<Vec<usize>, MetricsError> {
    if n_folds < 2 {
        return Err(MetricsError::BadFolds(n_folds));
    }
    let mut fold = vec![0; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < n_folds {
            return Err(MetricsError::TooFewForFolds { count: idx.len(), n_folds });
        }
        idx.sort_by_key(|&i| (hash_pair(seed, i as u64), i));
        for (k, &i) in idx.iter().enumerate() {
            fold[i] = k % n_folds;
        }
    }
    Ok(fold)
}

/// Threshold in `{0, 1, midpoints of consecutive distinct scores}` with the
/// largest Youden; ties go to the smaller threshold.
fn best_threshold(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|l| **l).count() as i64;
    let neg = labels.len() as i64 - pos;
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = vec![0.0];
    candidates.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(1.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // Youden·P·N = tp·N − fp·P, compared exactly in integers.
    let mut best = (i64::MIN, 0.0);
    for &c in &candidates {
        let (mut tp, mut fp) = (0i64, 0i64);
        for (&s, &l) in scores.iter().zip(labels) {
            if s >= c {
                if l {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let key = tp * neg - fp * pos;
        if key > best.0 {
            best = (key, c);
        }
    }
    best.1
}

pub fn select_cutoff_cv(
    x: &FeatureMatrix,
    y: &[bool],
    params: &GbtParams,
    n_folds: usize,
    seed: u64,
) -> Result<CutoffSelection, MetricsError> {
    if y.len() != x.n_rows() {
        return Err(MetricsError::Length { scores: x.n_rows(), labels: y.len() });
    }
    let fold = stratified_folds(y, n_folds, seed)?;
    let per_fold: Vec<Result<(Vec<usize>, Vec<f64>), MetricsError>> = (0..n_folds)
        .into_par_iter()
        .map(|k| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| fold[i] != k).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| fold[i] == k).collect();
            let yt: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let model = train_gbt(&x.select_rows(&train), &yt, params)?;
            let scores = held.iter().map(|&i| model.predict_proba(&x.row(i))).collect::<Result<Vec<_>, _>>()?;
            Ok((held, scores))
        })
        .collect();
    let mut oof = vec![0.0; y.len()];
    let mut held_sets = Vec::with_capacity(n_folds);
    for r in per_fold {
        let (held, scores) = r?;
        for (&i, s) in held.iter().zip(scores) {
            oof[i] = s;
        }
        held_sets.push(held);
    }
    let threshold = best_threshold(&oof, y);
    let pooled_youden = confusion_at(&oof, y, threshold)?.youden;
    let folds = held_sets
        .iter()
        .enumerate()
        .map(|(k, held)| {
            let s: Vec<f64> = held.iter().map(|&i| oof[i]).collect();
            let l: Vec<bool> = held.iter().map(|&i| y[i]).collect();
            confusion_at(&s, &l, threshold).map(|m| FoldYouden { fold: k, youden: m.youden })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CutoffSelection { threshold, folds, pooled_youden, n_folds, oof_scores: oof })
}
