use serde::{Deserialize, Serialize};

use lvo_core::cohort::WeakSide;
use lvo_imaging::{
    brain_extract, extract_hemisphere, hu_window, locate_mca_roi, register_symmetry, resample_mask, HemisphereCrops,
    Laterality, RigidTransform2D, RoiBox, SegMask, Volume, DEFAULT_WINDOW,
};

use crate::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub window: (i16, i16),
    pub laterality: Laterality,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { window: DEFAULT_WINDOW, laterality: Laterality::Contralateral }
    }
}

/// Output of skull stripping, symmetry registration, windowing and MCA box
/// location for one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedScan {
    /// Windowed, registered, skull-stripped volume.
    pub windowed: Volume,
    pub transform: RigidTransform2D,
    pub registration_degenerate: bool,
    pub boxes: (RoiBox, RoiBox),
    pub crops: HemisphereCrops,
}

pub fn preprocess_volume(vol: &Volume, weak_side: WeakSide, cfg: &PreprocessConfig) -> Result<PreparedScan, PipelineError> {
    let stripped = brain_extract(vol)?;
    let reg = register_symmetry(&stripped.stripped);
    let mask = resample_mask(&stripped.mask, &reg.transform);
    let (lo, hi) = cfg.window;
    let windowed = hu_window(&reg.aligned, lo, hi)?;
    let boxes = locate_mca_roi(&windowed, &mask)?;
    let crops = extract_hemisphere(&windowed, boxes, weak_side, cfg.laterality, cfg.window)?;
    Ok(PreparedScan { windowed, transform: reg.transform, registration_degenerate: reg.degenerate, boxes, crops })
}

impl PreparedScan {
    /// Rebuilds the crops of a stored windowed volume.
    pub fn restore(
        windowed: Volume,
        transform: RigidTransform2D,
        registration_degenerate: bool,
        boxes: (RoiBox, RoiBox),
        weak_side: WeakSide,
        cfg: &PreprocessConfig,
    ) -> Result<Self, PipelineError> {
        let crops = extract_hemisphere(&windowed, boxes, weak_side, cfg.laterality, cfg.window)?;
        Ok(Self { windowed, transform, registration_degenerate, boxes, crops })
    }

    /// A mask in the original scan's frame, aligned and cropped like the
    /// image crops: `[crop][slice]` as 0/1 values.
    pub fn crop_mask(&self, mask: &SegMask) -> Vec<Vec<Vec<f64>>> {
        let aligned = resample_mask(mask, &self.transform);
        self.crops
            .crops
            .iter()
            .map(|c| {
                (0..aligned.dims()[2])
                    .map(|z| c.roi.crop(&aligned, z).into_iter().map(f64::from).collect())
                    .collect()
            })
            .collect()
    }
}
