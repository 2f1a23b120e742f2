use serde::{Deserialize, Serialize};

use lvo_core::cohort::WeakSide;

use crate::volume::{Grid, Hemisphere, SegMask, Volume};
use crate::ImagingError;

pub const ROI_SIZE: usize = 128;

/// A `ROI_SIZE × ROI_SIZE` in-plane box, identical on every slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiBox {
    pub hemisphere: Hemisphere,
    pub x0: usize,
    pub y0: usize,
}

impl RoiBox {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x0 + ROI_SIZE).contains(&x) && (self.y0..self.y0 + ROI_SIZE).contains(&y)
    }

    /// Row-major crop of slice `z`.
    pub fn crop<T: Copy>(&self, grid: &Grid<T>, z: usize) -> Vec<T> {
        let nx = grid.dims()[0];
        let slice = grid.slice(z);
        let mut out = Vec::with_capacity(ROI_SIZE * ROI_SIZE);
        for y in self.y0..self.y0 + ROI_SIZE {
            out.extend_from_slice(&slice[y * nx + self.x0..y * nx + self.x0 + ROI_SIZE]);
        }
        out
    }
}

/// Boxes centred on the mask centroid row and at the centroid column ∓ a
/// quarter of the mask width (patient right at low `x`), clamped into the
/// slice. Returns `(left, right)`.
///
/// The right box rounds its origin half-up and the left box half-down, so
/// flipping the input about the midline swaps the two boxes exactly.
pub fn locate_mca_roi(vol: &Volume, mask: &SegMask) -> Result<(RoiBox, RoiBox), ImagingError> {
    mask.check_dims(vol)?;
    let [nx, ny, _] = vol.dims();
    if nx < ROI_SIZE || ny < ROI_SIZE {
        return Err(ImagingError::Dims(vol.dims()));
    }
    let (mut n, mut sx, mut sy) = (0u64, 0u64, 0u64);
    let (mut xmin, mut xmax) = (usize::MAX, 0usize);
    for (i, m) in mask.data().iter().enumerate() {
        if *m != 0 {
            let x = i % nx;
            n += 1;
            sx += x as u64;
            sy += ((i / nx) % ny) as u64;
            xmin = xmin.min(x);
            xmax = xmax.max(x);
        }
    }
    if n == 0 {
        return Err(ImagingError::EmptyMask);
    }
    let cx = sx as f64 / n as f64;
    let cy = sy as f64 / n as f64;
    let quarter = (xmax - xmin + 1) as f64 / 4.0;
    let half = (ROI_SIZE as f64 - 1.0) / 2.0;
    let max_x = (nx - ROI_SIZE) as f64;
    let max_y = (ny - ROI_SIZE) as f64;
    let right_x = (cx - quarter - half + 0.5).floor().clamp(0.0, max_x) as usize;
    let left_x = (cx + quarter - half - 0.5).ceil().clamp(0.0, max_x) as usize;
    let y0 = (cy - half).round().clamp(0.0, max_y) as usize;
    Ok((
        RoiBox { hemisphere: Hemisphere::Left, x0: left_x, y0 },
        RoiBox { hemisphere: Hemisphere::Right, x0: right_x, y0 },
    ))
}

/// Which hemisphere a weak side points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Laterality {
    /// Left-limb weakness selects the right hemisphere.
    #[default]
    Contralateral,
    Ipsilateral,
}

impl Laterality {
    pub fn hemisphere_for(self, weak: Hemisphere) -> Hemisphere {
        match self {
            Laterality::Contralateral => weak.opposite(),
            Laterality::Ipsilateral => weak,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereCrop {
    pub roi: RoiBox,
    /// One row-major `ROI_SIZE²` image per slice, rescaled to `[0, 1]`.
    pub slices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereCrops {
    pub crops: Vec<HemisphereCrop>,
    /// Set when the weak side was unknown or none and both boxes were returned.
    pub ambiguous: bool,
}

/// Crops the hemisphere indicated by `weak_side` from every slice and maps
/// `[lo, hi]` linearly onto `[0, 1]` (values beyond the window saturate).
pub fn extract_hemisphere(
    vol: &Volume,
    boxes: (RoiBox, RoiBox),
    weak_side: WeakSide,
    laterality: Laterality,
    window: (i16, i16),
) -> Result<HemisphereCrops, ImagingError> {
    let (lo, hi) = window;
    if lo >= hi {
        return Err(ImagingError::Window { lo, hi });
    }
    let weak = match weak_side {
        WeakSide::Left => Some(Hemisphere::Left),
        WeakSide::Right => Some(Hemisphere::Right),
        WeakSide::None | WeakSide::Unknown => None,
    };
    let picked: Vec<RoiBox> = match weak {
        Some(w) => {
            let h = laterality.hemisphere_for(w);
            vec![if boxes.0.hemisphere == h { boxes.0 } else { boxes.1 }]
        }
        None => vec![boxes.0, boxes.1],
    };
    let scale = 1.0 / (hi as f64 - lo as f64);
    let crops = picked
        .into_iter()
        .map(|roi| HemisphereCrop {
            roi,
            slices: (0..vol.dims()[2])
                .map(|z| roi.crop(vol, z).into_iter().map(|v| ((v as f64 - lo as f64) * scale).clamp(0.0, 1.0)).collect())
                .collect(),
        })
        .collect();
    Ok(HemisphereCrops { crops, ambiguous: weak.is_none() })
}
