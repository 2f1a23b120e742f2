use std::collections::BTreeMap;

use rayon::prelude::*;

use lvo_core::cohort::{PatientRecord, WeakSide};
use lvo_fcn::FcnModel;
use lvo_imaging::{gen_phantom, SegMask};

use crate::detector::{crop_sample, CropSample};
use crate::images::{summarize_scan, ImageSummary};
use crate::levels::ImageFeatures;
use crate::preprocess::{preprocess_volume, PreparedScan, PreprocessConfig};
use crate::scans::ScanSpec;
use crate::PipelineError;

/// Layout of auxiliary phantom `index`: even indices carry a dot, the weak
/// side alternates every two indices.
pub fn aux_case(index: usize) -> (bool, WeakSide) {
    let weak = if (index / 2) % 2 == 0 { WeakSide::Left } else { WeakSide::Right };
    (index % 2 == 0, weak)
}

/// Auxiliary phantom `prefix{index}`, independent of any cohort, laid out by
/// [`aux_case`].
pub fn aux_scan(
    scans: &ScanSpec,
    prep: &PreprocessConfig,
    prefix: &str,
    index: usize,
    seed: u64,
) -> Result<(PreparedScan, SegMask, bool), PipelineError> {
    let (dot, weak) = aux_case(index);
    let p = gen_phantom(&scans.phantom_spec(&format!("{prefix}{index}"), dot, weak, seed))?;
    Ok((preprocess_volume(&p.volume, weak, prep)?, p.dot_mask, dot))
}

/// Detector training crops from `n` auxiliary phantoms.
pub fn aux_crops(
    scans: &ScanSpec,
    prep: &PreprocessConfig,
    prefix: &str,
    n: usize,
    seed: u64,
) -> Result<Vec<CropSample>, PipelineError> {
    (0..n)
        .into_par_iter()
        .map(|i| aux_scan(scans, prep, prefix, i, seed).map(|(s, m, _)| crop_sample(&s, &m)))
        .collect()
}

/// Synthesizes, preprocesses and segments each record's scan. Records
/// without a scan map to `None`.
pub fn summarize_cohort(
    model: &FcnModel,
    records: &[PatientRecord],
    scans: &ScanSpec,
    prep: &PreprocessConfig,
    seed: u64,
) -> Result<BTreeMap<String, Option<ImageSummary>>, PipelineError> {
    let out: Vec<(String, Option<ImageSummary>)> = records
        .par_iter()
        .map(|r| {
            let summary = match scans.synth_for(r, seed)? {
                Some(p) => Some(summarize_scan(model, &preprocess_volume(&p.volume, r.weak_side, prep)?)?),
                None => None,
            };
            Ok((r.id.clone(), summary))
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(out.into_iter().collect())
}

/// The bottleneck vectors of a set of summaries.
pub fn image_features(summaries: &BTreeMap<String, Option<ImageSummary>>) -> ImageFeatures {
    summaries.iter().map(|(id, s)| (id.clone(), s.as_ref().map(|s| s.features.clone()))).collect()
}
