use serde::{Deserialize, Serialize};

use lvo_core::cohort::{Manifest, PatientRecord, TVariant};
use lvo_core::gbt::{train_gbt, GbtParams, TreeEnsemble};
use lvo_core::metrics::{confusion_at, roc_curve, select_cutoff_cv};
use lvo_core::rng::{hash_pair, mix64};

use crate::levels::{vectorize, ImageFeatures, LevelSpec};
use crate::select::{select_top_k, ColumnScore};
use crate::PipelineError;

pub const EXPERIMENT_TAG: &str = "exp-v1";
pub const REPORT_TAG: &str = "report-v1";

/// Experiment settings, stored as an `exp-v1` JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format: String,
    pub seed: u64,
    /// Share of the cohort used for training, rounded to whole records.
    pub train_fraction: f64,
    /// Keep the class ratio equal in both parts of the split.
    pub stratify: bool,
    /// Cross-validation folds for cutoff selection.
    pub n_folds: usize,
    pub gbt: GbtParams,
    /// Image columns appended at level 3.
    pub top_k: usize,
    pub t_variant: TVariant,
    pub levels: Vec<u8>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            format: EXPERIMENT_TAG.into(),
            seed: 1,
            train_fraction: 2.0 / 3.0,
            stratify: true,
            n_folds: 10,
            gbt: GbtParams::default(),
            top_k: 10,
            t_variant: TVariant::Pooled,
            levels: vec![1, 2, 3],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.format != EXPERIMENT_TAG {
            return Err(PipelineError::Format(format!("expected {EXPERIMENT_TAG:?}, found {:?}", self.format)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(PipelineError::Config(format!("train_fraction {} outside (0, 1)", self.train_fraction)));
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(1..=3).contains(l)) {
            return Err(PipelineError::Config(format!("levels {:?} must be a nonempty subset of 1, 2, 3", self.levels)));
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return Err(PipelineError::Config("duplicate level".into()));
        }
        self.gbt.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String, PipelineError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Row indices of the two parts, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded train/test split. Rows are ranked by a hash of `(seed, index)`
/// and the first ones go to training. With `stratify`, each class is ranked
/// separately and gets its largest-remainder share of the training count.
pub fn split_rows(labels: &[bool], train_fraction: f64, stratify: bool, seed: u64) -> Result<Split, PipelineError> {
    let n = labels.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(PipelineError::Config(format!("{n} records cannot be split with train_fraction {train_fraction}")));
    }
    let key = mix64(seed ^ 0x7370_6c69_7400_0000);
    let ranked = |class: Option<bool>| {
        let mut idx: Vec<usize> = (0..n).filter(|&i| class.is_none_or(|c| labels[i] == c)).collect();
        idx.sort_by_key(|&i| (hash_pair(key, i as u64), i));
        idx
    };
    let mut train = Vec::with_capacity(n_train);
    if stratify {
        let groups = [ranked(Some(true)), ranked(Some(false))];
        let quota: Vec<f64> = groups.iter().map(|g| g.len() as f64 * n_train as f64 / n as f64).collect();
        let mut take: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
        let short = n_train - take.iter().sum::<usize>();
        let mut order = [0, 1];
        order.sort_by(|&a, &b| (quota[b] - quota[b].floor()).total_cmp(&(quota[a] - quota[a].floor())).then(a.cmp(&b)));
        for &g in order.iter().take(short) {
            take[g] += 1;
        }
        for (g, t) in groups.iter().zip(take) {
            train.extend_from_slice(&g[..t]);
        }
    } else {
        train.extend_from_slice(&ranked(None)[..n_train]);
    }
    train.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(Split { train, test })
}

/// Everything learned for one level from training rows: the columns, the
/// cross-validated cutoff and the final model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub level: u8,
    pub spec: LevelSpec,
    /// Level 3 only: selected bottleneck columns with their training t-tests.
    pub image_columns: Vec<ColumnScore>,
    pub cutoff: f64,
    /// Pooled out-of-fold Youden at `cutoff`.
    pub cv_youden: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedLevel {
    pub fit: LevelFit,
    pub model: TreeEnsemble,
}

fn level_seed(seed: u64, level: u8) -> u64 {
    mix64(seed.wrapping_add(u64::from(level)))
}

/// Fits one level. Only `train` and its labels are read; `images` should hold
/// training records only (other entries are ignored).
pub fn fit_level(
    manifest: &Manifest,
    train: &[PatientRecord],
    images: Option<&ImageFeatures>,
    level: u8,
    cfg: &ExperimentConfig,
) -> Result<FittedLevel, PipelineError> {
    let y: Vec<bool> = train.iter().map(|r| r.lvo).collect();
    let (spec, image_columns) = if level == 3 {
        let images = images.ok_or_else(|| PipelineError::Config("level 3 needs image features".into()))?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for r in train {
            if let Some(Some(v)) = images.get(&r.id) {
                rows.push(v.clone());
                labels.push(r.lvo);
            }
        }
        let chosen = select_top_k(&rows, &labels, cfg.top_k, cfg.t_variant)?;
        let idx: Vec<usize> = chosen.iter().map(|c| c.column).collect();
        (LevelSpec::with_image(manifest, &idx)?, chosen)
    } else {
        (LevelSpec::clinical(manifest, level)?, Vec::new())
    };
    let x = vectorize(train, &spec, images)?;
    let sel = select_cutoff_cv(&x, &y, &cfg.gbt, cfg.n_folds, level_seed(cfg.seed, level))?;
    let model = train_gbt(&x, &y, &cfg.gbt)?;
    Ok(FittedLevel {
        fit: LevelFit { level, spec, image_columns, cutoff: sel.threshold, cv_youden: sel.pooled_youden },
        model,
    })
}

/// Held-out performance of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: u8,
    pub n_features: usize,
    pub cutoff: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub youden: f64,
    pub accuracy: f64,
    pub auc: f64,
    /// Predicted probabilities, aligned with the report's test rows.
    pub scores: Vec<f64>,
}

pub fn evaluate_level(
    fitted: &FittedLevel,
    test: &[PatientRecord],
    images: Option<&ImageFeatures>,
) -> Result<LevelResult, PipelineError> {
    let x = vectorize(test, &fitted.fit.spec, images)?;
    let scores = fitted.model.predict_matrix(&x)?;
    let y: Vec<bool> = test.iter().map(|r| r.lvo).collect();
    let m = confusion_at(&scores, &y, fitted.fit.cutoff)?;
    let auc = roc_curve(&scores, &y)?.auc;
    Ok(LevelResult {
        level: fitted.fit.level,
        n_features: fitted.fit.spec.columns.len(),
        cutoff: fitted.fit.cutoff,
        sensitivity: m.sensitivity,
        specificity: m.specificity,
        youden: m.youden,
        accuracy: m.accuracy,
        auc,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub test_ids: Vec<String>,
    pub test_labels: Vec<bool>,
    pub fits: Vec<LevelFit>,
    pub levels: Vec<LevelResult>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String, PipelineError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let r: Self = serde_json::from_str(text)?;
        if r.format != REPORT_TAG {
            return Err(PipelineError::Format(format!("expected {REPORT_TAG:?}, found {:?}", r.format)));
        }
        Ok(r)
    }
}

/// Image features of the listed records only.
pub fn restrict_images(images: &ImageFeatures, records: &[PatientRecord]) -> ImageFeatures {
    records.iter().filter_map(|r| images.get(&r.id).map(|v| (r.id.clone(), v.clone()))).collect()
}

/// Split, fit every configured level on the training part and score the
/// test part. Fitting sees training records and their image features only.
pub fn run_experiment(
    manifest: &Manifest,
    records: &[PatientRecord],
    images: Option<&ImageFeatures>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, PipelineError> {
    cfg.validate()?;
    let labels: Vec<bool> = records.iter().map(|r| r.lvo).collect();
    let split = split_rows(&labels, cfg.train_fraction, cfg.stratify, cfg.seed)?;
    run_experiment_on(manifest, records, images, &split, cfg)
}

/// [`run_experiment`] with a given split.
pub fn run_experiment_on(
    manifest: &Manifest,
    records: &[PatientRecord],
    images: Option<&ImageFeatures>,
    split: &Split,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, PipelineError> {
    cfg.validate()?;
    if split.train.iter().chain(&split.test).any(|&i| i >= records.len()) {
        return Err(PipelineError::Config("split index out of range".into()));
    }
    let train: Vec<PatientRecord> = split.train.iter().map(|&i| records[i].clone()).collect();
    let test: Vec<PatientRecord> = split.test.iter().map(|&i| records[i].clone()).collect();
    let train_images = images.map(|m| restrict_images(m, &train));
    let mut fits = Vec::with_capacity(cfg.levels.len());
    let mut levels = Vec::with_capacity(cfg.levels.len());
    for &level in &cfg.levels {
        let fitted = fit_level(manifest, &train, train_images.as_ref(), level, cfg)?;
        levels.push(evaluate_level(&fitted, &test, images)?);
        fits.push(fitted.fit);
    }
    Ok(ExperimentReport {
        format: REPORT_TAG.into(),
        seed: cfg.seed,
        n_train: train.len(),
        n_test: test.len(),
        test_ids: test.iter().map(|r| r.id.clone()).collect(),
        test_labels: test.iter().map(|r| r.lvo).collect(),
        fits,
        levels,
    })
}
