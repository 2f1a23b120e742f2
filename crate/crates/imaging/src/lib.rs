//! Synthetic head CT and the slice preprocessing chain used before
//! segmentation: skull stripping, left-right symmetry registration, HU
//! windowing, MCA box localization and hemisphere extraction.
//!
//! Coordinates: voxel `(x, y, z)` with `x` fastest. Images follow the
//! radiological convention, so the patient's right hemisphere occupies low
//! `x`. In-plane physical coordinates are millimetres from voxel `(0, 0)`.

mod phantom;
mod register;
mod roi;
mod strip;
mod svol;
mod transform;
mod volume;
mod window;

use thiserror::Error;

pub use phantom::{gen_phantom, DotSpec, Phantom, PhantomSpec};
pub use register::{register_symmetry, symmetry_cost, Registration};
pub use roi::{extract_hemisphere, locate_mca_roi, HemisphereCrop, HemisphereCrops, Laterality, RoiBox, ROI_SIZE};
pub use strip::{brain_extract, BrainExtraction};
pub use svol::{read_mask, read_volume, slice_pgm, svol_bytes, svol_from_bytes, write_mask, write_volume, Voxel};
pub use transform::{resample_mask, resample_volume, RigidTransform2D};
pub use volume::{Grid, Hemisphere, SegMask, Volume};
pub use window::{hu_window, DEFAULT_WINDOW};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("invalid dimensions {0:?}")]
    Dims([usize; 3]),
    #[error("invalid spacing {0:?}")]
    Spacing([f32; 3]),
    #[error("{expected} voxels expected, got {got}")]
    VoxelCount { expected: usize, got: usize },
    #[error("mask dimensions {mask:?} differ from volume {volume:?}")]
    DimMismatch { volume: [usize; 3], mask: [usize; 3] },
    #[error("invalid phantom: {0}")]
    Phantom(String),
    #[error("dot center lies outside the brain")]
    DotOutsideBrain,
    #[error("not a head CT: no enclosed soft-tissue region")]
    NotHeadCt,
    #[error("window bounds lo={lo} ≥ hi={hi}")]
    Window { lo: i16, hi: i16 },
    #[error("brain mask is empty")]
    EmptyMask,
    #[error("SVOL: {0}")]
    Format(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}
