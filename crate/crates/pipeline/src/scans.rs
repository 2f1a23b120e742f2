use rand::Rng;
use serde::{Deserialize, Serialize};

use lvo_core::cohort::{PatientRecord, WeakSide};
use lvo_core::rng::stream;
use lvo_imaging::{gen_phantom, DotSpec, Hemisphere, Phantom, PhantomSpec, RigidTransform2D};

use crate::PipelineError;

/// Acquisition settings for the synthetic scans that accompany a cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub dims: [usize; 3],
    pub spacing: [f32; 3],
    pub noise_sd: f64,
    /// Misalignment rotation is uniform in `±max_rotation_deg`.
    pub max_rotation_deg: f64,
    /// Each misalignment translation component is uniform in `±max_shift_mm`.
    pub max_shift_mm: f64,
    /// In-plane dot displacement from the sylvian anchor, uniform per axis.
    pub dot_jitter_mm: f64,
    pub dot_hu_range: [f64; 2],
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            dims: [256, 256, 3],
            spacing: [0.852, 0.852, 5.0],
            noise_sd: 4.0,
            max_rotation_deg: 8.0,
            max_shift_mm: 6.0,
            dot_jitter_mm: 3.0,
            dot_hu_range: [30.0, 70.0],
        }
    }
}

impl ScanSpec {
    /// Phantom parameters for one scan. The dot, when present, lies in the
    /// hemisphere opposite the weak side (a random one if the side is not
    /// known) and is centred on one of the slices.
    pub fn phantom_spec(&self, scan_id: &str, dot: bool, weak_side: WeakSide, seed: u64) -> PhantomSpec {
        let mut rng = stream(seed, &format!("scan-{scan_id}"));
        let mut u = |r: f64| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
        let misalignment = RigidTransform2D::from_degrees(u(self.max_rotation_deg), u(self.max_shift_mm), u(self.max_shift_mm));
        let jitter = [u(self.dot_jitter_mm), u(self.dot_jitter_mm)];
        let mut rng = stream(seed, &format!("scan-{scan_id}-layout"));
        let phantom_seed: u64 = rng.random();
        let nz = self.dims[2];
        let slice = rng.random_range(0..nz);
        let random_side = if rng.random::<bool>() { Hemisphere::Left } else { Hemisphere::Right };
        let hemisphere = match weak_side {
            WeakSide::Left => Hemisphere::Right,
            WeakSide::Right => Hemisphere::Left,
            WeakSide::None | WeakSide::Unknown => random_side,
        };
        let z = (slice as f64 - (nz / 2) as f64) * f64::from(self.spacing[2]);
        let dot = dot.then_some(DotSpec {
            hemisphere,
            offset_mm: [jitter[0], jitter[1], z],
            hu_range: self.dot_hu_range,
            ..DotSpec::default()
        });
        PhantomSpec {
            dims: self.dims,
            spacing: self.spacing,
            noise_sd: self.noise_sd,
            dot,
            misalignment,
            seed: phantom_seed,
            ..PhantomSpec::default()
        }
    }

    /// The scan linked to `record`, or `None` when it has no scan id.
    pub fn synth_for(&self, record: &PatientRecord, seed: u64) -> Result<Option<Phantom>, PipelineError> {
        let Some(id) = &record.scan_id else { return Ok(None) };
        let spec = self.phantom_spec(id, record.mca_dot_present == Some(true), record.weak_side, seed);
        Ok(Some(gen_phantom(&spec)?))
    }
}
