use rand::Rng;
use serde::{Deserialize, Serialize};

use lvo_core::rng::stream;
use lvo_fcn::{train_fcn, FcnConfig, FcnModel, LossKind, Optimizer, TrainConfig, TrainState};
use lvo_imaging::{SegMask, ROI_SIZE};

use crate::preprocess::PreparedScan;
use crate::PipelineError;

/// One `ROI_SIZE²` crop slice with its dot mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CropSample {
    pub image: Vec<f64>,
    pub mask: Vec<f64>,
}

/// Training sample of a scan: the crop slice holding most dot pixels, or,
/// without any dot pixel, the middle slice of the first crop.
pub fn crop_sample(scan: &PreparedScan, dot_mask: &SegMask) -> CropSample {
    let masks = scan.crop_mask(dot_mask);
    let mut best = (0, scan.windowed.dims()[2] / 2, 0.0);
    for (c, slices) in masks.iter().enumerate() {
        for (z, m) in slices.iter().enumerate() {
            let area: f64 = m.iter().sum();
            if area > best.2 {
                best = (c, z, area);
            }
        }
    }
    let (c, z, _) = best;
    CropSample { image: scan.crops.crops[c].slices[z].clone(), mask: masks[c][z].clone() }
}

/// Patch-based training of the segmentation network. The network is fully
/// convolutional, so it trains on `patch²` windows and is returned sized
/// for full crops. Each crop yields `patches_per_crop` windows, placed
/// uniformly among the windows holding the whole dot when the crop has dot
/// pixels and uniformly anywhere otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub fcn: FcnConfig,
    pub patch: usize,
    pub patches_per_crop: usize,
    pub train: TrainConfig,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            fcn: FcnConfig::default(),
            patch: 32,
            patches_per_crop: 4,
            train: TrainConfig {
                optimizer: Optimizer::Adam,
                learning_rate: 5e-3,
                batch_size: 4,
                epochs: 16,
                loss: LossKind::BceDice,
                seed: 0,
            },
        }
    }
}

fn cut(src: &[f64], y0: usize, x0: usize, patch: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(patch * patch);
    for y in y0..y0 + patch {
        out.extend_from_slice(&src[y * ROI_SIZE + x0..y * ROI_SIZE + x0 + patch]);
    }
    out
}

/// Trains a fresh network on `samples`; `seed` drives the initialization,
/// the patch positions and the shuffling.
pub fn train_detector(samples: &[CropSample], spec: &DetectorSpec, seed: u64) -> Result<(FcnModel, TrainState), PipelineError> {
    if samples.is_empty() {
        return Err(PipelineError::Config("no training crops".into()));
    }
    if spec.patches_per_crop == 0 {
        return Err(PipelineError::Config("patches_per_crop must be ≥ 1".into()));
    }
    if spec.patch > ROI_SIZE || spec.patch == 0 {
        return Err(PipelineError::Config(format!("patch {} outside 1..={ROI_SIZE}", spec.patch)));
    }
    let cfg = FcnConfig { height: spec.patch, width: spec.patch, ..spec.fcn.clone() };
    let model = FcnModel::init(cfg, seed)?;
    let mut rng = stream(seed, "detector-patches");
    let top = ROI_SIZE - spec.patch;
    let mut patches: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(samples.len() * spec.patches_per_crop);
    for s in samples {
        let dot: Vec<usize> = (0..s.mask.len()).filter(|&i| s.mask[i] > 0.0).collect();
        for _ in 0..spec.patches_per_crop {
            let (mut lo, mut hi) = ([0, 0], [top, top]);
            if !dot.is_empty() {
                for (axis, coord) in [|i: usize| i / ROI_SIZE, |i: usize| i % ROI_SIZE].iter().enumerate() {
                    let min = dot.iter().map(|&i| coord(i)).min().expect("nonempty");
                    let max = dot.iter().map(|&i| coord(i)).max().expect("nonempty");
                    lo[axis] = (max + 1).saturating_sub(spec.patch).min(top);
                    hi[axis] = min.min(top).max(lo[axis]);
                }
            }
            let y0 = rng.random_range(lo[0]..=hi[0]);
            let x0 = rng.random_range(lo[1]..=hi[1]);
            patches.push((cut(&s.image, y0, x0, spec.patch), cut(&s.mask, y0, x0, spec.patch)));
        }
    }
    let refs: Vec<(&[f64], &[f64])> = patches.iter().map(|(a, b)| (&a[..], &b[..])).collect();
    let train = TrainConfig { seed, ..spec.train.clone() };
    let (model, state) = train_fcn(model, &refs, &train)?;
    Ok((model.with_input_size(spec.fcn.height, spec.fcn.width)?, state))
}
