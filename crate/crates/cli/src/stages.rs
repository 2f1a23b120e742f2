use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::de::DeserializeOwned;

use lvo_core::cohort::manifest::MANIFEST_V1;
use lvo_core::cohort::{load_cohort_csv, synth_cohort as make_cohort, write_cohort_csv_file, CohortSpec, Manifest, PatientRecord};
use lvo_core::gbt::TreeEnsemble;
use lvo_fcn::{FcnModel, LossKind, Optimizer};
use lvo_imaging::{gen_phantom, read_mask, read_volume, write_mask, write_volume, Laterality};
use lvo_pipeline::{
    aux_case, crop_sample, evaluate_level, fit_level, restrict_images, save_report, split_rows, summarize_scan,
    train_detector, DetectorSpec, ExperimentConfig, ExperimentReport, FittedLevel, ImageFeatures, PreparedScan,
    PreprocessConfig, ScanSpec, REPORT_TAG,
};

use crate::exit::ValidationError;
use crate::files::*;
use crate::{
    DefaultsKind, EvaluateArgs, ExtractArgs, LateralityArg, LossArg, OptimizerArg, PreprocessArgs, ReportArgs,
    SynthCohortArgs, SynthScansArgs, TrainArgs, TrainFcnArgs,
};

fn manifest() -> Manifest {
    Manifest::parse(MANIFEST_V1).expect("built-in manifest parses")
}

fn log(verbose: u8, msg: impl AsRef<str>) {
    if verbose > 0 {
        eprintln!("{}", msg.as_ref());
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn need_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(ValidationError(format!("{} is not a readable file", path.display())).into());
    }
    Ok(())
}

fn need_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(p) if !p.is_dir() => Err(ValidationError(format!("directory {} does not exist", p.display())).into()),
        _ => Ok(()),
    }
}

fn read_spec<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

pub fn synth_cohort(a: &SynthCohortArgs, v: u8) -> Result<()> {
    need_parent(&a.out)?;
    let spec = read_spec::<CohortSpec>(a.spec.as_deref())?.with_size(a.size);
    if spec.n_lvo() == 0 || spec.n_lvo() == spec.size {
        return Err(ValidationError(format!("a cohort of {} has only one class", spec.size)).into());
    }
    let records = make_cohort(&spec, a.seed)?;
    write_cohort_csv_file(&a.out, &records, &manifest())?;
    log(v, format!("wrote {} records to {}", records.len(), a.out.display()));
    Ok(())
}

pub fn synth_scans(a: &SynthScansArgs, v: u8) -> Result<()> {
    let spec: ScanSpec = read_spec(a.spec.as_deref())?;
    let cases: Vec<(String, bool, lvo_core::cohort::WeakSide)> = match (&a.cohort, a.aux) {
        (Some(path), None) => {
            need_file(path)?;
            load_cohort_csv(path, &manifest())?
                .into_iter()
                .filter_map(|r| r.scan_id.clone().map(|id| (id, r.mca_dot_present == Some(true), r.weak_side)))
                .collect()
        }
        (None, Some(n)) => (0..n)
            .map(|i| {
                let (dot, weak) = aux_case(i);
                (format!("aux{i:04}"), dot, weak)
            })
            .collect(),
        _ => unreachable!("clap enforces exactly one source"),
    };
    out_dir(&a.out)?;
    let entries = cases
        .par_iter()
        .map(|(id, dot, weak)| {
            let p = gen_phantom(&spec.phantom_spec(id, *dot, *weak, a.seed))?;
            let entry = ScanEntry {
                scan_id: id.clone(),
                volume: format!("{id}.svol"),
                mask: format!("{id}.mask.svol"),
                weak_side: *weak,
                dot: *dot,
            };
            write_volume(&p.volume, a.out.join(&entry.volume))?;
            write_mask(&p.dot_mask, a.out.join(&entry.mask))?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = ScanManifest { format: SCANS_TAG.into(), seed: a.seed, spec, scans: entries };
    write_json(&a.out.join("scans.json"), &doc)?;
    log(v, format!("wrote {} scans to {}", doc.scans.len(), a.out.display()));
    Ok(())
}

fn prep_config(a: &PreprocessArgs) -> PreprocessConfig {
    let laterality = match a.laterality {
        LateralityArg::Contralateral => Laterality::Contralateral,
        LateralityArg::Ipsilateral => Laterality::Ipsilateral,
    };
    PreprocessConfig { window: (a.window_lo, a.window_hi), laterality }
}

pub fn preprocess(a: &PreprocessArgs, v: u8) -> Result<()> {
    let cfg = prep_config(a);
    if cfg.window.0 >= cfg.window.1 {
        return Err(ValidationError(format!("window {}..{} is empty", cfg.window.0, cfg.window.1)).into());
    }
    let scans: ScanManifest = read_json(&a.scans.join("scans.json"), SCANS_TAG)?;
    out_dir(&a.out)?;
    let entries = scans
        .scans
        .par_iter()
        .map(|s| {
            let path = a.scans.join(&s.volume);
            let vol = read_volume(&path).with_context(|| format!("reading {}", path.display()))?;
            let p = lvo_pipeline::preprocess_volume(&vol, s.weak_side, &cfg).with_context(|| s.scan_id.clone())?;
            let entry = PrepEntry {
                scan_id: s.scan_id.clone(),
                file: format!("{}.prep.svol", s.scan_id),
                weak_side: s.weak_side,
                transform: p.transform,
                registration_degenerate: p.registration_degenerate,
                boxes: p.boxes,
            };
            write_volume(&p.windowed, a.out.join(&entry.file))?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(&a.out.join("prep.json"), &PrepManifest { format: PREP_TAG.into(), config: cfg, scans: entries })?;
    log(v, format!("preprocessed {} scans into {}", scans.scans.len(), a.out.display()));
    Ok(())
}

fn load_prepared(dir: &Path, prep: &PrepManifest, e: &PrepEntry) -> Result<PreparedScan> {
    let path = dir.join(&e.file);
    let vol = read_volume(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(PreparedScan::restore(vol, e.transform, e.registration_degenerate, e.boxes, e.weak_side, &prep.config)?)
}

pub fn train_fcn(a: &TrainFcnArgs, v: u8) -> Result<()> {
    need_parent(&a.out)?;
    let scans: ScanManifest = read_json(&a.scans.join("scans.json"), SCANS_TAG)?;
    let prep: PrepManifest = read_json(&a.prep.join("prep.json"), PREP_TAG)?;
    let masks: BTreeMap<&str, &ScanEntry> = scans.scans.iter().map(|s| (s.scan_id.as_str(), s)).collect();
    let samples = prep
        .scans
        .par_iter()
        .map(|e| {
            let s = masks
                .get(e.scan_id.as_str())
                .ok_or_else(|| ValidationError(format!("scan {} has no mask in {}", e.scan_id, a.scans.display())))?;
            let scan = load_prepared(&a.prep, &prep, e)?;
            let mask = read_mask(a.scans.join(&s.mask))?;
            Ok(crop_sample(&scan, &mask))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spec = DetectorSpec { patch: a.patch, patches_per_crop: a.patches_per_crop, ..DetectorSpec::default() };
    spec.fcn.base_channels = a.base_channels;
    spec.fcn.depth = a.depth;
    spec.train.epochs = a.epochs;
    spec.train.learning_rate = a.lr;
    spec.train.batch_size = a.batch;
    spec.train.optimizer = match a.optimizer {
        OptimizerArg::Sgd => Optimizer::Sgd,
        OptimizerArg::Adam => Optimizer::Adam,
    };
    spec.train.loss = match a.loss {
        LossArg::Bce => LossKind::Bce,
        LossArg::BceDice => LossKind::BceDice,
    };
    let (model, state) = train_detector(&samples, &spec, a.seed)?;
    model.save(&a.out)?;
    let last = state.loss_history.last().copied().unwrap_or(f64::NAN);
    log(v, format!("trained on {} scans; status {:?}, final batch loss {last:.4}", samples.len(), state.status));
    Ok(())
}

pub fn extract(a: &ExtractArgs, v: u8) -> Result<()> {
    need_parent(&a.out)?;
    if let Some(s) = &a.summary {
        need_parent(s)?;
    }
    let model = FcnModel::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let prep: PrepManifest = read_json(&a.prep.join("prep.json"), PREP_TAG)?;
    let results = prep
        .scans
        .par_iter()
        .map(|e| {
            let scan = load_prepared(&a.prep, &prep, e)?;
            Ok((e.scan_id.clone(), summarize_scan(&model, &scan)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let features: BTreeMap<String, Option<Vec<f64>>> =
        results.iter().map(|(id, s)| (id.clone(), Some(s.features.clone()))).collect();
    std::fs::write(&a.out, features_bytes(&features)).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(path) = &a.summary {
        let scans = results
            .iter()
            .map(|(id, s)| SummaryEntry {
                scan_id: id.clone(),
                slice: s.slice,
                fallback: s.fallback,
                areas: s.areas.clone(),
                components: s.components.clone(),
                dot_flag: s.dot_flag(a.area_threshold),
            })
            .collect();
        write_json(path, &SummaryDoc { format: SUMMARY_TAG.into(), area_threshold: a.area_threshold, scans })?;
    }
    log(v, format!("extracted features of {} scans", results.len()));
    Ok(())
}

/// Per-record features: each record takes its scan's vector.
fn record_images(records: &[PatientRecord], path: Option<&Path>) -> Result<Option<ImageFeatures>> {
    let Some(path) = path else { return Ok(None) };
    let by_scan = read_features(path)?;
    Ok(Some(
        records
            .iter()
            .map(|r| (r.id.clone(), r.scan_id.as_ref().and_then(|s| by_scan.get(s).cloned().flatten())))
            .collect(),
    ))
}

pub fn train(a: &TrainArgs, v: u8) -> Result<()> {
    need_file(&a.cohort)?;
    let mut cfg = match &a.config {
        Some(p) => {
            need_file(p)?;
            ExperimentConfig::from_json(&std::fs::read_to_string(p)?)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.seed = a.seed;
    cfg.validate()?;
    let m = manifest();
    let records = load_cohort_csv(&a.cohort, &m)?;
    let images = record_images(&records, a.features.as_deref())?;
    if cfg.levels.contains(&3) && images.is_none() {
        return Err(ValidationError("level 3 needs --features".into()).into());
    }
    let labels: Vec<bool> = records.iter().map(|r| r.lvo).collect();
    let split = split_rows(&labels, cfg.train_fraction, cfg.stratify, cfg.seed)?;
    let train: Vec<PatientRecord> = split.train.iter().map(|&i| records[i].clone()).collect();
    let train_images = images.as_ref().map(|m| restrict_images(m, &train));
    out_dir(&a.out)?;
    let mut levels = Vec::new();
    for &level in &cfg.levels {
        let fitted = fit_level(&m, &train, train_images.as_ref(), level, &cfg)?;
        let file = format!("level{level}.gbt.json");
        std::fs::write(a.out.join(&file), fitted.model.to_json()?)?;
        log(v, format!("level {level}: cutoff {:.4}, cross-validated Youden {:.3}", fitted.fit.cutoff, fitted.fit.cv_youden));
        levels.push(FitLevelEntry { fit: fitted.fit, model: file });
    }
    write_json(&a.out.join("fit.json"), &FitDoc { format: FIT_TAG.into(), config: cfg, split, levels })?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs, v: u8) -> Result<()> {
    need_file(&a.cohort)?;
    need_parent(&a.out)?;
    let doc: FitDoc = read_json(&a.fit.join("fit.json"), FIT_TAG)?;
    let records = load_cohort_csv(&a.cohort, &manifest())?;
    let n = doc.split.train.len() + doc.split.test.len();
    if n != records.len() || doc.split.test.iter().any(|&i| i >= records.len()) {
        return Err(ValidationError(format!("the fit was made on {n} records, the cohort has {}", records.len())).into());
    }
    let images = record_images(&records, a.features.as_deref())?;
    let test: Vec<PatientRecord> = doc.split.test.iter().map(|&i| records[i].clone()).collect();
    let mut fits = Vec::new();
    let mut levels = Vec::new();
    for e in &doc.levels {
        let path = a.fit.join(&e.model);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let model = TreeEnsemble::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
        let fitted = FittedLevel { fit: e.fit.clone(), model };
        let r = evaluate_level(&fitted, &test, images.as_ref())?;
        log(v, format!("level {}: AUC {:.3}, Youden {:.3}", r.level, r.auc, r.youden));
        levels.push(r);
        fits.push(fitted.fit);
    }
    let report = ExperimentReport {
        format: REPORT_TAG.into(),
        seed: doc.config.seed,
        n_train: doc.split.train.len(),
        n_test: test.len(),
        test_ids: test.iter().map(|r| r.id.clone()).collect(),
        test_labels: test.iter().map(|r| r.lvo).collect(),
        fits,
        levels,
    };
    std::fs::write(&a.out, report.to_json()?).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

pub fn report(a: &ReportArgs, v: u8) -> Result<()> {
    need_file(&a.report)?;
    let r: ExperimentReport = read_json(&a.report, REPORT_TAG)?;
    save_report(&r, &a.out)?;
    log(v, format!("wrote report.csv and roc.svg to {}", a.out.display()));
    Ok(())
}

pub fn defaults(kind: DefaultsKind) -> Result<()> {
    let text = match kind {
        DefaultsKind::Cohort => serde_json::to_string_pretty(&CohortSpec::default())?,
        DefaultsKind::Scans => serde_json::to_string_pretty(&ScanSpec::default())?,
        DefaultsKind::Experiment => serde_json::to_string_pretty(&ExperimentConfig::default())?,
    };
    println!("{text}");
    Ok(())
}
