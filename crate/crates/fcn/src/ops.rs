//! Single-image tensor kernels on channel-major `(c, h, w)` buffers.

use rayon::prelude::*;

/// Geometry of a square-kernel, stride-1, "same"-padded convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub h: usize,
    pub w: usize,
}

impl ConvShape {
    fn pad(&self) -> isize {
        (self.k / 2) as isize
    }

    /// Range of `x` for which `x + off` stays inside `[0, w)`.
    fn span(&self, off: isize) -> (usize, usize) {
        let lo = (-off).max(0) as usize;
        let hi = (self.w as isize - off).min(self.w as isize).max(0) as usize;
        (lo, hi.max(lo))
    }

    fn tap(&self, o: usize, ci: usize, ky: usize, kx: usize) -> usize {
        ((o * self.cin + ci) * self.k + ky) * self.k + kx
    }
}

/// Defines an AVX2 build of an `#[inline(always)]` kernel. Vector width
/// does not change results: every kernel works element-wise or fixes its
/// own accumulation order, and no multiply-add is fused.
macro_rules! avx2_variant {
    ($wide:ident => $f:ident($($a:ident: $t:ty),*)) => {
        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2")]
        unsafe fn $wide($($a: $t),*) {
            $f($($a),*)
        }
    };
}

/// Calls the AVX2 variant when the CPU supports it.
macro_rules! dispatch {
    ($wide:ident | $f:ident($($a:expr),*)) => {{
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: AVX2 support was just detected at runtime.
            return unsafe { $wide($($a),*) };
        }
        $f($($a),*)
    }};
}

avx2_variant!(forward_row_avx2 => forward_row(s: ConvShape, x: &[f64], weight: &[f64], bias: &[f64], y: usize, blk: &mut [f64]));
avx2_variant!(input_row_avx2 => input_row(s: ConvShape, dy: &[f64], weight: &[f64], sy: usize, blk: &mut [f64]));
avx2_variant!(param_channel_avx2 => param_channel(s: ConvShape, dy: &[f64], x: &[f64], o: usize, dwo: &mut [f64], dbo: &mut f64));

#[inline(always)]
fn axpy(dst: &mut [f64], a: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Rows computed as `(row, channel, x)` blocks, back to `(channel, row, x)`.
fn rows_to_planes(t: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; c * h * w];
    for y in 0..h {
        for ch in 0..c {
            out[(ch * h + y) * w..][..w].copy_from_slice(&t[(y * c + ch) * w..][..w]);
        }
    }
    out
}

/// Cross-correlation with zero padding `k / 2`; weights `(cout, cin, k, k)`.
pub(crate) fn conv_forward(s: ConvShape, x: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; s.h * s.cout * s.w];
    t.par_chunks_mut(s.cout * s.w)
        .enumerate()
        .for_each(|(y, blk)| dispatch!(forward_row_avx2 | forward_row(s, x, weight, bias, y, blk)));
    rows_to_planes(&t, s.cout, s.h, s.w)
}

#[inline(always)]
fn forward_row(s: ConvShape, x: &[f64], weight: &[f64], bias: &[f64], y: usize, blk: &mut [f64]) {
    let (w, p) = (s.w, s.pad());
    for (o, b) in bias.iter().enumerate() {
        blk[o * w..(o + 1) * w].fill(*b);
    }
    for ci in 0..s.cin {
        for ky in 0..s.k {
            let sy = y as isize + ky as isize - p;
            if sy < 0 || sy >= s.h as isize {
                continue;
            }
            let src = &x[(ci * s.h + sy as usize) * w..][..w];
            for kx in 0..s.k {
                let off = kx as isize - p;
                let (lo, hi) = s.span(off);
                let shifted = &src[(lo as isize + off) as usize..(hi as isize + off) as usize];
                for o in 0..s.cout {
                    axpy(&mut blk[o * w + lo..o * w + hi], weight[s.tap(o, ci, ky, kx)], shifted);
                }
            }
        }
    }
}

/// Gradient with respect to the convolution input.
pub(crate) fn conv_backward_input(s: ConvShape, dy: &[f64], weight: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; s.h * s.cin * s.w];
    t.par_chunks_mut(s.cin * s.w)
        .enumerate()
        .for_each(|(sy, blk)| dispatch!(input_row_avx2 | input_row(s, dy, weight, sy, blk)));
    rows_to_planes(&t, s.cin, s.h, s.w)
}

#[inline(always)]
fn input_row(s: ConvShape, dy: &[f64], weight: &[f64], sy: usize, blk: &mut [f64]) {
    let (w, p) = (s.w, s.pad());
    for o in 0..s.cout {
        for ky in 0..s.k {
            let y = sy as isize + p - ky as isize;
            if y < 0 || y >= s.h as isize {
                continue;
            }
            let g = &dy[(o * s.h + y as usize) * w..][..w];
            for kx in 0..s.k {
                // Input column sx receives dY at x = sx − off.
                let off = kx as isize - p;
                let (lo, hi) = s.span(-off);
                let shifted = &g[(lo as isize - off) as usize..(hi as isize - off) as usize];
                for ci in 0..s.cin {
                    axpy(&mut blk[ci * w + lo..ci * w + hi], weight[s.tap(o, ci, ky, kx)], shifted);
                }
            }
        }
    }
}

/// Adds the weight and bias gradients into `dw` and `db`.
pub(crate) fn conv_backward_params(s: ConvShape, dy: &[f64], x: &[f64], dw: &mut [f64], db: &mut [f64]) {
    dw.par_chunks_mut(s.cin * s.k * s.k)
        .zip(db.par_iter_mut())
        .enumerate()
        .for_each(|(o, (dwo, dbo))| dispatch!(param_channel_avx2 | param_channel(s, dy, x, o, dwo, dbo)));
}

#[inline(always)]
fn param_channel(s: ConvShape, dy: &[f64], x: &[f64], o: usize, dwo: &mut [f64], dbo: &mut f64) {
    let (w, p) = (s.w, s.pad());
    let plane = &dy[o * s.h * w..(o + 1) * s.h * w];
    *dbo += plane.iter().sum::<f64>();
    for y in 0..s.h {
        let g = &plane[y * w..(y + 1) * w];
        for ci in 0..s.cin {
            for ky in 0..s.k {
                let sy = y as isize + ky as isize - p;
                if sy < 0 || sy >= s.h as isize {
                    continue;
                }
                let src = &x[(ci * s.h + sy as usize) * w..][..w];
                for kx in 0..s.k {
                    let off = kx as isize - p;
                    let (lo, hi) = s.span(off);
                    let shifted = &src[(lo as isize + off) as usize..(hi as isize + off) as usize];
                    dwo[(ci * s.k + ky) * s.k + kx] += dot(&g[lo..hi], shifted);
                }
            }
        }
    }
}

pub(crate) fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

pub(crate) fn relu_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(v, g)| if *v > 0.0 { *g } else { 0.0 }).collect()
}

/// 2×2 max pooling; also returns the flat source index of each maximum
/// (first maximum in row-major window order on ties).
pub(crate) fn maxpool2(x: &[f64], c: usize, h: usize, w: usize) -> (Vec<f64>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ci in 0..c {
        let base = ci * h * w;
        for y in 0..oh {
            for xx in 0..ow {
                let mut best = base + 2 * y * w + 2 * xx;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = base + (2 * y + dy) * w + 2 * xx + dx;
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                out.push(x[best]);
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool2_backward(arg: &[u32], dy: &[f64], len: usize) -> Vec<f64> {
    let mut dx = vec![0.0; len];
    for (i, g) in arg.iter().zip(dy) {
        dx[*i as usize] += g;
    }
    dx
}

/// 2× nearest-neighbour upsampling.
pub(crate) fn upsample2(x: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![0.0; c * oh * ow];
    for ci in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                out[(ci * oh + y) * ow + xx] = x[(ci * h + y / 2) * w + xx / 2];
            }
        }
    }
    out
}

pub(crate) fn upsample2_backward(dy: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut dx = vec![0.0; c * h * w];
    for ci in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                dx[(ci * h + y / 2) * w + xx / 2] += dy[(ci * oh + y) * ow + xx];
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(s: ConvShape, x: &[f64], wt: &[f64], b: &[f64]) -> Vec<f64> {
        let p = (s.k / 2) as isize;
        let mut y = vec![0.0; s.cout * s.h * s.w];
        for o in 0..s.cout {
            for yy in 0..s.h {
                for xx in 0..s.w {
                    let mut acc = b[o];
                    for ci in 0..s.cin {
                        for ky in 0..s.k {
                            for kx in 0..s.k {
                                let (sy, sx) = (yy as isize + ky as isize - p, xx as isize + kx as isize - p);
                                if sy >= 0 && sx >= 0 && sy < s.h as isize && sx < s.w as isize {
                                    acc += wt[((o * s.cin + ci) * s.k + ky) * s.k + kx]
                                        * x[(ci * s.h + sy as usize) * s.w + sx as usize];
                                }
                            }
                        }
                    }
                    y[(o * s.h + yy) * s.w + xx] = acc;
                }
            }
        }
        y
    }

    fn wave(n: usize, f: f64) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * f).sin()).collect()
    }

    #[test]
    fn conv_matches_naive_and_its_adjoints() {
        for (k, h, w) in [(3, 5, 7), (1, 4, 3), (3, 1, 1), (3, 2, 6)] {
            let s = ConvShape { cin: 3, cout: 2, k, h, w };
            let x = wave(s.cin * h * w, 0.37);
            let wt = wave(s.cout * s.cin * k * k, 0.91);
            let b = vec![0.25, -0.5];
            let y = conv_forward(s, &x, &wt, &b);
            let reference = naive_conv(s, &x, &wt, &b);
            assert!(y.iter().zip(&reference).all(|(a, r)| (a - r).abs() < 1e-12));

            // <conv(x), g> = <x, conv_inputᵀ(g)> and = Σ w·dW with zero bias.
            let g = wave(y.len(), 0.23);
            let y0 = conv_forward(s, &x, &wt, &[0.0; 2]);
            let lhs: f64 = y0.iter().zip(&g).map(|(a, b)| a * b).sum();
            let dx = conv_backward_input(s, &g, &wt);
            let rhs: f64 = x.iter().zip(&dx).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10, "input adjoint k={k}");
            let mut dw = vec![0.0; wt.len()];
            let mut db = vec![0.0; 2];
            conv_backward_params(s, &g, &x, &mut dw, &mut db);
            let via_w: f64 = wt.iter().zip(&dw).map(|(a, b)| a * b).sum();
            assert!((lhs - via_w).abs() < 1e-10, "weight adjoint k={k}");
            let plane = h * w;
            assert!((db[1] - g[plane..].iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn pool_and_upsample() {
        let x = [1.0, 5.0, 2.0, 0.0, 3.0, 4.0, 9.0, 8.0];
        let (y, arg) = maxpool2(&x, 1, 2, 4);
        assert_eq!(y, vec![5.0, 9.0]);
        assert_eq!(arg, vec![1, 6]);
        let up = upsample2(&[1.0, 2.0], 1, 1, 2);
        assert_eq!(up, vec![1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
        assert_eq!(upsample2_backward(&up, 1, 1, 2), vec![4.0, 8.0]);
    }
}
