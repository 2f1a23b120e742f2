use crate::volume::Volume;
use crate::ImagingError;

/// Brain window used throughout: 20 to 80 HU.
pub const DEFAULT_WINDOW: (i16, i16) = (20, 80);

/// Voxels outside `[lo, hi]` become `lo`; voxels inside are unchanged.
pub fn hu_window(vol: &Volume, lo: i16, hi: i16) -> Result<Volume, ImagingError> {
    if lo >= hi {
        return Err(ImagingError::Window { lo, hi });
    }
    Ok(vol.map(|v| if v < lo || v > hi { lo } else { v }))
}
