use serde::{Deserialize, Serialize};

use lvo_fcn::{largest_component, FcnModel};
use lvo_imaging::{Hemisphere, ROI_SIZE};

use crate::preprocess::PreparedScan;
use crate::select::select_slice_by_area;
use crate::PipelineError;

/// What the network saw in one scan: per-slice segmented area of the chosen
/// hemisphere crop, the selected slice and its bottleneck vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub hemisphere: Hemisphere,
    pub slice: usize,
    /// No pixel was segmented anywhere; `slice` is the middle slice.
    pub fallback: bool,
    /// Pixels with probability ≥ 0.5, per slice.
    pub areas: Vec<usize>,
    /// Largest 4-connected segmented component, per slice.
    pub components: Vec<usize>,
    pub features: Vec<f64>,
}

impl ImageSummary {
    pub fn dot_flag(&self, area_threshold: f64) -> bool {
        self.components.iter().any(|a| *a as f64 >= area_threshold)
    }
}

/// Segments every slice of every candidate crop. With two candidate crops
/// (weak side unknown) the one whose selected slice has the larger area
/// wins, the first on ties.
pub fn summarize_scan(model: &FcnModel, scan: &PreparedScan) -> Result<ImageSummary, PipelineError> {
    let cfg = model.config();
    if cfg.height != ROI_SIZE || cfg.width != ROI_SIZE {
        return Err(PipelineError::Config(format!(
            "network input {}×{} does not match the {ROI_SIZE}×{ROI_SIZE} crops",
            cfg.height, cfg.width
        )));
    }
    let mut best: Option<ImageSummary> = None;
    for crop in &scan.crops.crops {
        let mut areas = Vec::with_capacity(crop.slices.len());
        let mut components = Vec::with_capacity(crop.slices.len());
        let mut bottlenecks = Vec::with_capacity(crop.slices.len());
        for s in &crop.slices {
            let f = model.forward(s)?;
            let seg: Vec<bool> = f.probs.iter().map(|p| *p >= 0.5).collect();
            areas.push(seg.iter().filter(|v| **v).count());
            components.push(largest_component(&seg, ROI_SIZE, ROI_SIZE));
            bottlenecks.push(f.bottleneck);
        }
        let choice = select_slice_by_area(&areas);
        let features = bottlenecks.swap_remove(choice.index);
        let cand = ImageSummary {
            hemisphere: crop.roi.hemisphere,
            slice: choice.index,
            fallback: choice.fallback,
            areas,
            components,
            features,
        };
        if best.as_ref().is_none_or(|b| cand.areas[cand.slice] > b.areas[b.slice]) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| PipelineError::Config("scan produced no hemisphere crop".into()))
}
