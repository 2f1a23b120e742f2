use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::volume::{Grid, SegMask, Volume};

/// In-plane rigid motion `q = R(θ)(p − c) + c + t`, where `c` is the slice
/// center and `t = (tx, ty)`, all in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    /// Radians, counter-clockwise in `(x, y)` index space.
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for RigidTransform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform2D {
    pub fn identity() -> Self {
        Self { theta: 0.0, tx: 0.0, ty: 0.0 }
    }

    pub fn from_degrees(deg: f64, tx: f64, ty: f64) -> Self {
        Self { theta: deg.to_radians(), tx, ty }
    }

    pub fn is_identity(&self) -> bool {
        self.theta == 0.0 && self.tx == 0.0 && self.ty == 0.0
    }

    pub fn inverse(&self) -> Self {
        let (s, c) = (-self.theta).sin_cos();
        Self { theta: -self.theta, tx: -(c * self.tx - s * self.ty), ty: -(s * self.tx + c * self.ty) }
    }

    /// Maps `p` (mm) about `center` (mm).
    pub fn apply(&self, p: [f64; 2], center: [f64; 2]) -> [f64; 2] {
        self.about(center).apply(p)
    }

    /// The transform as an affine map with its rotation precomputed.
    pub(crate) fn about(&self, center: [f64; 2]) -> Affine {
        let (s, c) = self.theta.sin_cos();
        Affine {
            m: [c, -s, s, c],
            b: [
                center[0] + self.tx - (c * center[0] - s * center[1]),
                center[1] + self.ty - (s * center[0] + c * center[1]),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Affine {
    m: [f64; 4],
    b: [f64; 2],
}

impl Affine {
    #[inline]
    pub(crate) fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.m[0] * p[0] + self.m[1] * p[1] + self.b[0], self.m[2] * p[0] + self.m[3] * p[1] + self.b[1]]
    }
}

/// Physical center of a slice in mm.
pub(crate) fn slice_center<T: Copy>(g: &Grid<T>) -> [f64; 2] {
    let [nx, ny, _] = g.dims();
    let [sx, sy, _] = g.spacing();
    [(nx as f64 - 1.0) * 0.5 * sx as f64, (ny as f64 - 1.0) * 0.5 * sy as f64]
}

/// Bilinear sample of one slice at fractional voxel coordinates.
#[inline]
pub(crate) fn bilinear(slice: &[f32], nx: usize, ny: usize, u: f64, v: f64, outside: f32) -> f32 {
    if !(u >= 0.0 && v >= 0.0 && u <= (nx - 1) as f64 && v <= (ny - 1) as f64) {
        return outside;
    }
    let x0 = (u.floor() as usize).min(nx.saturating_sub(2));
    let y0 = (v.floor() as usize).min(ny.saturating_sub(2));
    let fx = (u - x0 as f64) as f32;
    let fy = (v - y0 as f64) as f32;
    let x1 = (x0 + 1).min(nx - 1);
    let y1 = (y0 + 1).min(ny - 1);
    let a = slice[y0 * nx + x0];
    let b = slice[y0 * nx + x1];
    let c = slice[y1 * nx + x0];
    let d = slice[y1 * nx + x1];
    let top = a + (b - a) * fx;
    let bot = c + (d - c) * fx;
    top + (bot - top) * fy
}

/// Output voxel `p` takes the input value at `T⁻¹(p)`, so applying `t` moves
/// image content by `t`. Bilinear, rounded to the nearest HU; samples
/// outside the field read `outside`.
pub fn resample_volume(vol: &Volume, t: &RigidTransform2D, outside: i16) -> Volume {
    let [nx, ny, _] = vol.dims();
    let [sx, sy, _] = vol.spacing().map(f64::from);
    let center = slice_center(vol);
    let inv = t.inverse().about(center);
    let mut out = vec![outside; vol.len()];
    out.par_chunks_mut(nx * ny).enumerate().for_each(|(z, dst)| {
        let src: Vec<f32> = vol.slice(z).iter().map(|v| *v as f32).collect();
        for y in 0..ny {
            for x in 0..nx {
                let q = inv.apply([x as f64 * sx, y as f64 * sy]);
                let v = bilinear(&src, nx, ny, q[0] / sx, q[1] / sy, outside as f32);
                dst[y * nx + x] = v.round().clamp(i16::MIN as f32, i16::MAX as f32) as i16;
            }
        }
    });
    vol.with_data(out).expect("same grid")
}

/// Nearest-neighbour counterpart of [`resample_volume`] for masks.
pub fn resample_mask(mask: &SegMask, t: &RigidTransform2D) -> SegMask {
    let [nx, ny, _] = mask.dims();
    let [sx, sy, _] = mask.spacing().map(f64::from);
    let center = slice_center(mask);
    let inv = t.inverse().about(center);
    let mut out = vec![0u8; mask.len()];
    out.par_chunks_mut(nx * ny).enumerate().for_each(|(z, dst)| {
        let src = mask.slice(z);
        for y in 0..ny {
            for x in 0..nx {
                let q = inv.apply([x as f64 * sx, y as f64 * sy]);
                let (u, v) = ((q[0] / sx).round(), (q[1] / sy).round());
                if u >= 0.0 && v >= 0.0 && (u as usize) < nx && (v as usize) < ny {
                    dst[y * nx + x] = src[v as usize * nx + u as usize];
                }
            }
        }
    });
    mask.with_data(out).expect("same grid")
}
