use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lvo_core::rng::stream;

use crate::transform::{slice_center, RigidTransform2D};
use crate::volume::{Hemisphere, SegMask, Volume};
use crate::ImagingError;

/// Hyperdense clot placed relative to the sylvian anchor of one hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DotSpec {
    pub hemisphere: Hemisphere,
    /// `(x, y, z)` offset from the anchor in mm.
    pub offset_mm: [f64; 3],
    pub radius_mm: f64,
    /// Dot intensity range; the phantom draws one value uniformly from it.
    pub hu_range: [f64; 2],
}

impl Default for DotSpec {
    fn default() -> Self {
        Self { hemisphere: Hemisphere::Right, offset_mm: [0.0; 3], radius_mm: 2.5, hu_range: [30.0, 70.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f32; 3],
    /// Outer head semi-axes `(x, y)` in mm on the central slice.
    pub head_semi_axes_mm: [f64; 2],
    pub skull_thickness_mm: f64,
    pub skull_hu: f64,
    pub tissue_hu: f64,
    pub csf_hu: f64,
    pub background_hu: i16,
    pub noise_sd: f64,
    pub dot: Option<DotSpec>,
    /// Misalignment applied to the canonical (midline-centred) head.
    pub misalignment: RigidTransform2D,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: [512, 512, 28],
            spacing: [0.426, 0.426, 5.0],
            head_semi_axes_mm: [72.0, 90.0],
            skull_thickness_mm: 6.0,
            skull_hu: 900.0,
            tissue_hu: 35.0,
            csf_hu: 8.0,
            background_hu: -1000,
            noise_sd: 4.0,
            dot: Some(DotSpec::default()),
            misalignment: RigidTransform2D::identity(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: Volume,
    pub dot_mask: SegMask,
    pub brain_mask: SegMask,
    pub misalignment: RigidTransform2D,
    /// Drawn dot intensity before noise, if a dot is present.
    pub dot_hu: Option<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Tissue {
    Air,
    Skull,
    Brain,
    Csf,
    Dot,
}

/// Canonical anatomy in mm relative to the slice center and the central
/// slice. The head is an elliptic cylinder tapering toward the top and
/// bottom slices so every slice still holds a closed skull ring.
struct Anatomy {
    a: f64,
    b: f64,
    skull: f64,
    z_half: f64,
    anchor_x: f64,
    dot: Option<([f64; 3], f64)>,
}

const ANCHOR_Y: f64 = 5.0;
const CISTERN: [f64; 3] = [4.5, 12.0, 10.0];
const VENTRICLE_X: f64 = 10.0;
const VENTRICLE_Y: f64 = -8.0;
const VENTRICLE: [f64; 3] = [4.0, 16.0, 20.0];

fn in_ellipse(dx: f64, dy: f64, a: f64, b: f64) -> bool {
    (dx / a).powi(2) + (dy / b).powi(2) <= 1.0
}

impl Anatomy {
    fn new(spec: &PhantomSpec) -> Self {
        let [a, b] = spec.head_semi_axes_mm;
        let nz = spec.dims[2] as f64;
        let z_half = 1.2 * (nz * 0.5 * spec.spacing[2] as f64).max(1.0);
        let anchor_x = 0.5 * (a - spec.skull_thickness_mm);
        let dot = spec.dot.map(|d| {
            let side = match d.hemisphere {
                Hemisphere::Right => -anchor_x,
                Hemisphere::Left => anchor_x,
            };
            ([side + d.offset_mm[0], ANCHOR_Y + d.offset_mm[1], d.offset_mm[2]], d.radius_mm)
        });
        Self { a, b, skull: spec.skull_thickness_mm, z_half, anchor_x, dot }
    }

    fn scale(&self, z: f64) -> f64 {
        (1.0 - (z / self.z_half).powi(2)).max(0.0).sqrt()
    }

    fn inside_brain(&self, p: [f64; 3]) -> bool {
        let s = self.scale(p[2]);
        s > 0.0 && in_ellipse(p[0], p[1], (self.a - self.skull) * s, (self.b - self.skull) * s)
    }

    fn classify(&self, p: [f64; 3], s: f64) -> Tissue {
        let (x, y, z) = (p[0], p[1], p[2]);
        if s <= 0.0 || !in_ellipse(x, y, self.a * s, self.b * s) {
            return Tissue::Air;
        }
        if !in_ellipse(x, y, (self.a - self.skull) * s, (self.b - self.skull) * s) {
            return Tissue::Skull;
        }
        if let Some((c, r)) = self.dot {
            let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2);
            if d2 <= r * r {
                return Tissue::Dot;
            }
        }
        let ax = x.abs();
        if z.abs() <= CISTERN[2] && in_ellipse(ax - self.anchor_x, y - ANCHOR_Y, CISTERN[0], CISTERN[1]) {
            return Tissue::Csf;
        }
        if z.abs() <= VENTRICLE[2] && in_ellipse(ax - VENTRICLE_X, y - VENTRICLE_Y, VENTRICLE[0], VENTRICLE[1]) {
            return Tissue::Csf;
        }
        Tissue::Brain
    }
}

/// Renders a phantom analytically: every output voxel is mapped back
/// through the misalignment and classified in canonical space, so the dot
/// mask marks exactly the voxels holding dot intensity.
pub fn gen_phantom(spec: &PhantomSpec) -> Result<Phantom, ImagingError> {
    if spec.dims.iter().any(|d| *d == 0) {
        return Err(ImagingError::Dims(spec.dims));
    }
    if spec.spacing.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(ImagingError::Spacing(spec.spacing));
    }
    let [a, b] = spec.head_semi_axes_mm;
    if !(a > spec.skull_thickness_mm && b > spec.skull_thickness_mm && spec.skull_thickness_mm > 0.0) {
        return Err(ImagingError::Phantom("head axes must exceed a positive skull thickness".into()));
    }
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(ImagingError::Phantom("noise_sd must be ≥ 0".into()));
    }
    let m = spec.misalignment;
    if !(m.theta.abs() <= std::f64::consts::PI && m.tx.is_finite() && m.ty.is_finite()) {
        return Err(ImagingError::Phantom("misalignment out of range".into()));
    }
    let anatomy = Anatomy::new(spec);
    let mut dot_hu = None;
    if let (Some(d), Some((center, _))) = (spec.dot, anatomy.dot) {
        let [lo, hi] = d.hu_range;
        if !(30.0 <= lo && lo <= hi && hi <= 70.0) {
            return Err(ImagingError::Phantom("dot HU range must lie within [30, 70]".into()));
        }
        if !(d.radius_mm > 0.0) {
            return Err(ImagingError::Phantom("dot radius must be positive".into()));
        }
        if !anatomy.inside_brain(center) {
            return Err(ImagingError::DotOutsideBrain);
        }
        let mut rng = stream(spec.seed, "phantom-dot");
        dot_hu = Some(if hi > lo { rng.random_range(lo..=hi) } else { lo });
    }

    let [nx, ny, nz] = spec.dims;
    let [sx, sy, sz] = spec.spacing.map(f64::from);
    let probe = Volume::filled([nx, ny, 1], spec.spacing, 0)?;
    let center = slice_center(&probe);
    let inv = spec.misalignment.inverse().about(center);
    let z_mid = (nz / 2) as f64;
    let noise = Normal::new(0.0, spec.noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");
    let hu_range = spec.dot.map(|d| d.hu_range).unwrap_or([30.0, 70.0]);
    let plane = nx * ny;

    let slices: Vec<(Vec<i16>, Vec<u8>, Vec<u8>)> = (0..nz)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(spec.seed, &format!("phantom-noise-{k}"));
            let z = (k as f64 - z_mid) * sz;
            let s = anatomy.scale(z);
            let mut vox = vec![spec.background_hu; plane];
            let mut dot = vec![0u8; plane];
            let mut brain = vec![0u8; plane];
            for y in 0..ny {
                for x in 0..nx {
                    let q = inv.apply([x as f64 * sx, y as f64 * sy]);
                    let p = [q[0] - center[0], q[1] - center[1], z];
                    let i = y * nx + x;
                    let t = anatomy.classify(p, s);
                    let mut n = || if spec.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    let hu = match t {
                        Tissue::Air => continue,
                        Tissue::Skull => spec.skull_hu + n(),
                        Tissue::Brain => spec.tissue_hu + n(),
                        Tissue::Csf => spec.csf_hu + n(),
                        Tissue::Dot => {
                            dot[i] = 1;
                            (dot_hu.unwrap_or(50.0) + n()).clamp(hu_range[0], hu_range[1])
                        }
                    };
                    if t != Tissue::Skull {
                        brain[i] = 1;
                    }
                    let mut v = hu.round();
                    if t == Tissue::Dot {
                        v = v.clamp(hu_range[0].ceil(), hu_range[1].floor());
                    }
                    vox[i] = v.clamp(i16::MIN as f64, i16::MAX as f64) as i16;
                }
            }
            (vox, dot, brain)
        })
        .collect();

    let mut vox = Vec::with_capacity(nx * ny * nz);
    let mut dot = Vec::with_capacity(nx * ny * nz);
    let mut brain = Vec::with_capacity(nx * ny * nz);
    for (v, d, b) in slices {
        vox.extend(v);
        dot.extend(d);
        brain.extend(b);
    }
    Ok(Phantom {
        volume: Volume::new(spec.dims, spec.spacing, vox)?,
        dot_mask: SegMask::new(spec.dims, spec.spacing, dot)?,
        brain_mask: SegMask::new(spec.dims, spec.spacing, brain)?,
        misalignment: spec.misalignment,
        dot_hu,
    })
}
