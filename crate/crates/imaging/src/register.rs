use rayon::prelude::*;

use crate::transform::{bilinear, resample_volume, slice_center, RigidTransform2D};
use crate::volume::Volume;

/// Intensities are clamped to this band before comparing an image with its
/// mirror, so air, brain and CSF all contribute without the −1000 background
/// dominating.
const COST_BAND: (f32, f32) = (0.0, 100.0);
const GRID_DEG: i32 = 15;
const GRID_STEPS: i32 = 15;
const GRID_STEP_VOXELS: f64 = 2.0;
const SWEEPS: usize = 3;
/// Corrections within this many degrees (and one voxel) count as none.
const SNAP_THETA: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Registration {
    pub aligned: Volume,
    /// Correction mapping the input onto the symmetric frame.
    pub transform: RigidTransform2D,
    /// Set when the middle slices are constant and no estimate is possible.
    pub degenerate: bool,
    pub cost_before: f64,
    pub cost_after: f64,
}

/// Block-averaged, band-clamped copies of the middle slices.
struct Pyramid {
    factor: usize,
    nxc: usize,
    nyc: usize,
    slices: Vec<Vec<f32>>,
    /// Sample points (mm) left of the midline; each is paired with its mirror.
    points: Vec<[f64; 2]>,
    spacing: [f64; 2],
    center: [f64; 2],
}

fn middle_slices(nz: usize) -> Vec<usize> {
    let lo = nz / 3;
    let hi = ((2 * nz).div_ceil(3)).max(lo + 1).min(nz);
    if hi - lo <= 3 {
        (lo..hi).collect()
    } else {
        vec![lo, nz / 2, hi - 1]
    }
}

impl Pyramid {
    fn new(vol: &Volume, factor: usize) -> Self {
        let [nx, ny, nz] = vol.dims();
        let [sx, sy, _] = vol.spacing().map(f64::from);
        let f = factor.min(nx).min(ny).max(1);
        let (nxc, nyc) = (nx / f, ny / f);
        let area = (f * f) as f32;
        let slices = middle_slices(nz)
            .into_iter()
            .map(|z| {
                let src = vol.slice(z);
                let mut out = vec![0f32; nxc * nyc];
                for yc in 0..nyc {
                    for xc in 0..nxc {
                        let mut s = 0f32;
                        for dy in 0..f {
                            for dx in 0..f {
                                let v = src[(yc * f + dy) * nx + xc * f + dx] as f32;
                                s += v.clamp(COST_BAND.0, COST_BAND.1);
                            }
                        }
                        out[yc * nxc + xc] = s / area;
                    }
                }
                out
            })
            .collect();
        let center = slice_center(vol);
        let half = (f as f64 - 1.0) * 0.5;
        let mut points = Vec::new();
        for yc in 0..nyc {
            for xc in 0..nxc {
                let p = [(xc as f64 * f as f64 + half) * sx, (yc as f64 * f as f64 + half) * sy];
                if p[0] < center[0] {
                    points.push(p);
                }
            }
        }
        Self { factor: f, nxc, nyc, slices, points, spacing: [sx, sy], center }
    }

    fn is_constant(&self) -> bool {
        let first = self.slices.first().and_then(|s| s.first()).copied();
        self.slices.iter().all(|s| s.iter().all(|v| Some(*v) == first))
    }

    /// Mean squared difference between the transformed image and its mirror.
    fn cost(&self, theta: f64, tx: f64) -> f64 {
        let inv = RigidTransform2D { theta, tx, ty: 0.0 }.inverse().about(self.center);
        let f = self.factor as f64;
        let half = (f - 1.0) * 0.5;
        let sample = |slice: &[f32], p: [f64; 2]| {
            let q = inv.apply(p);
            let u = (q[0] / self.spacing[0] - half) / f;
            let v = (q[1] / self.spacing[1] - half) / f;
            bilinear(slice, self.nxc, self.nyc, u, v, COST_BAND.0)
        };
        let mut total = 0f64;
        for slice in &self.slices {
            for &p in &self.points {
                let m = [2.0 * self.center[0] - p[0], p[1]];
                let d = (sample(slice, p) - sample(slice, m)) as f64;
                total += d * d;
            }
        }
        total / (self.points.len() * self.slices.len()).max(1) as f64
    }
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Mirror-symmetry cost of the middle slices at full resolution.
pub fn symmetry_cost(vol: &Volume) -> f64 {
    Pyramid::new(vol, 1).cost(0.0, 0.0)
}

/// Estimates one in-plane rigid correction that makes the head
/// left-right symmetric about the central column and applies it to every
/// slice.
///
/// Rotation and horizontal shift minimize the mirror cost: a grid over
/// ±15° × ±15 steps of two voxels on 8× block-averaged slices, then
/// golden-section sweeps per coordinate at 4×. A vertical shift leaves
/// mirror symmetry unchanged, so `ty` instead moves the foreground
/// centroid (voxels above −500) onto the central row.
pub fn register_symmetry(vol: &Volume) -> Registration {
    let cost_before = symmetry_cost(vol);
    let coarse = Pyramid::new(vol, 8);
    if coarse.is_constant() {
        return Registration {
            aligned: vol.clone(),
            transform: RigidTransform2D::identity(),
            degenerate: true,
            cost_before,
            cost_after: cost_before,
        };
    }
    let step = GRID_STEP_VOXELS * vol.spacing()[0] as f64;
    let grid: Vec<(f64, f64)> = (-GRID_DEG..=GRID_DEG)
        .flat_map(|d| (-GRID_STEPS..=GRID_STEPS).map(move |k| ((d as f64).to_radians(), k as f64 * step)))
        .collect();
    let costs: Vec<f64> = grid.par_iter().map(|&(t, x)| coarse.cost(t, x)).collect();
    let mut best = 0;
    for (i, c) in costs.iter().enumerate() {
        if *c < costs[best] {
            best = i;
        }
    }
    let (mut theta, mut tx) = grid[best];

    let fine = Pyramid::new(vol, 4);
    let mut current = fine.cost(theta, tx);
    let dtheta = 1.5f64.to_radians();
    for _ in 0..SWEEPS {
        let t = golden(|t| fine.cost(t, tx), theta - dtheta, theta + dtheta, 1e-4);
        let c = fine.cost(t, tx);
        if c <= current {
            theta = t;
            current = c;
        }
        let x = golden(|x| fine.cost(theta, x), tx - 2.0 * step, tx + 2.0 * step, 1e-2);
        let c = fine.cost(theta, x);
        if c <= current {
            tx = x;
            current = c;
        }
    }

    let mut ty = centroid_shift(vol, theta, tx);
    // An input that is already symmetric to within the noise keeps its
    // voxels: resampling it again would only blur it.
    let voxel = vol.spacing()[0] as f64;
    let near = theta.abs() <= SNAP_THETA.to_radians() && tx.abs() <= voxel && ty.abs() <= voxel;
    if near {
        let ty0 = centroid_shift(vol, 0.0, 0.0);
        if ty0.abs() <= 0.5 * voxel {
            return Registration {
                aligned: vol.clone(),
                transform: RigidTransform2D::identity(),
                degenerate: false,
                cost_before,
                cost_after: cost_before,
            };
        }
        (theta, tx, ty) = (0.0, 0.0, ty0);
    }
    let transform = RigidTransform2D { theta, tx, ty };
    let aligned = resample_volume(vol, &transform, -1000);
    let cost_after = symmetry_cost(&aligned);
    Registration { aligned, transform, degenerate: false, cost_before, cost_after }
}

fn centroid_shift(vol: &Volume, theta: f64, tx: f64) -> f64 {
    let [nx, ny, _] = vol.dims();
    let [sx, sy, _] = vol.spacing().map(f64::from);
    let (mut n, mut sum_x, mut sum_y) = (0u64, 0u64, 0u64);
    for (i, v) in vol.data().iter().enumerate() {
        if *v > -500 {
            n += 1;
            sum_x += (i % nx) as u64;
            sum_y += ((i / nx) % ny) as u64;
        }
    }
    if n == 0 {
        return 0.0;
    }
    let m = [sum_x as f64 / n as f64 * sx, sum_y as f64 / n as f64 * sy];
    let center = slice_center(vol);
    let moved = RigidTransform2D { theta, tx, ty: 0.0 }.apply(m, center);
    center[1] - moved[1]
}
