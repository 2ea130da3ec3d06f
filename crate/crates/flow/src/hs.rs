//! Coarse-to-fine variational optical flow (pyramidal Horn–Schunck).
//!
//! A classical, fully deterministic estimator: build box-filtered image
//! pyramids, then at each level warp the target by the upsampled flow and
//! solve the Horn–Schunck update for the residual displacement.

use latentmotion_tensor::Tensor;

use crate::error::{FlowError, Result};
use crate::frame::{FlowField, Frame, MIN_SIDE};

/// Estimator settings; the defaults suit desk-scale frames.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Pyramid levels (clamped so the coarsest level stays ≥ 8 px per side).
    pub levels: usize,
    /// Horn–Schunck iterations per level.
    pub iterations: usize,
    /// Smoothness weight α² in the update denominator.
    pub smoothness: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { levels: 3, iterations: 100, smoothness: 0.1 }
    }
}

/// Dense displacement field carrying pixels of `a` onto `b`.
pub fn estimate_flow(a: &Frame, b: &Frame, cfg: &FlowConfig) -> Result<FlowField> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(FlowError::ShapeMismatch {
            op: "estimate_flow",
            lhs: a.tensor().shape(),
            rhs: b.tensor().shape(),
        });
    }
    if cfg.levels == 0 || cfg.iterations == 0 || cfg.smoothness.is_nan() || cfg.smoothness <= 0.0 {
        return Err(FlowError::Contract(
            "flow config needs levels ≥ 1, iterations ≥ 1, smoothness > 0".into(),
        ));
    }
    let (h, w) = (a.height(), a.width());
    let pyr_a = pyramid(&a.pixels(), h, w, cfg.levels);
    let pyr_b = pyramid(&b.pixels(), h, w, cfg.levels);

    let (ch, cw) = (pyr_a.last().unwrap().1, pyr_a.last().unwrap().2);
    let mut u = vec![0.0; ch * cw];
    let mut v = vec![0.0; ch * cw];
    for level in (0..pyr_a.len()).rev() {
        let (img_a, lh, lw) = &pyr_a[level];
        let (img_b, _, _) = &pyr_b[level];
        if level + 1 < pyr_a.len() {
            let (_, ph, pw) = &pyr_a[level + 1];
            u = upsample_flow(&u, *ph, *pw, *lh, *lw);
            v = upsample_flow(&v, *ph, *pw, *lh, *lw);
        }
        let warped = warp(img_b, *lh, *lw, &u, &v);
        let (du, dv) = horn_schunck(img_a, &warped, *lh, *lw, cfg.iterations, cfg.smoothness);
        for i in 0..u.len() {
            u[i] += du[i];
            v[i] += dv[i];
        }
    }
    FlowField::new(Tensor::from_vec(u, &[h, w])?, Tensor::from_vec(v, &[h, w])?)
}

/// Pyramid of (pixels, h, w), finest first; stops early once halving would
/// drop a side below 8 px.
fn pyramid(img: &[f64], h: usize, w: usize, levels: usize) -> Vec<(Vec<f64>, usize, usize)> {
    let mut out = vec![(img.to_vec(), h, w)];
    for _ in 1..levels {
        let (prev, ph, pw) = out.last().unwrap();
        let (nh, nw) = (ph / 2, pw / 2);
        if nh < MIN_SIDE || nw < MIN_SIDE {
            break;
        }
        let mut down = vec![0.0; nh * nw];
        for y in 0..nh {
            for x in 0..nw {
                let (sy, sx) = (2 * y, 2 * x);
                down[y * nw + x] = 0.25
                    * (prev[sy * pw + sx]
                        + prev[sy * pw + sx + 1]
                        + prev[(sy + 1) * pw + sx]
                        + prev[(sy + 1) * pw + sx + 1]);
            }
        }
        out.push((down, nh, nw));
    }
    out
}

fn bilinear(img: &[f64], h: usize, w: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    img[y0 * w + x0] * (1.0 - fx) * (1.0 - fy)
        + img[y0 * w + x1] * fx * (1.0 - fy)
        + img[y1 * w + x0] * (1.0 - fx) * fy
        + img[y1 * w + x1] * fx * fy
}

/// Resize a flow component to (nh, nw) and rescale displacements to the new
/// resolution.
fn upsample_flow(f: &[f64], h: usize, w: usize, nh: usize, nw: usize) -> Vec<f64> {
    let scale = nw as f64 / w as f64;
    let mut out = vec![0.0; nh * nw];
    for y in 0..nh {
        for x in 0..nw {
            let sx = (x as f64 + 0.5) * w as f64 / nw as f64 - 0.5;
            let sy = (y as f64 + 0.5) * h as f64 / nh as f64 - 0.5;
            out[y * nw + x] = bilinear(f, h, w, sx, sy) * scale;
        }
    }
    out
}

/// Backward-warp `img` by (u, v) with border clamping.
fn warp(img: &[f64], h: usize, w: usize, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            out[i] = bilinear(img, h, w, x as f64 + u[i], y as f64 + v[i]);
        }
    }
    out
}

/// Classic Horn–Schunck iterations for the residual flow between `a` and the
/// (already warped) `b`.
fn horn_schunck(
    a: &[f64],
    b: &[f64],
    h: usize,
    w: usize,
    iterations: usize,
    alpha2: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = h * w;
    let mut ix = vec![0.0; n];
    let mut iy = vec![0.0; n];
    let mut it = vec![0.0; n];
    let cl = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (xm, xp) = (cl(x as isize - 1, w), cl(x as isize + 1, w));
            let (ym, yp) = (cl(y as isize - 1, h), cl(y as isize + 1, h));
            ix[i] = 0.25 * (a[y * w + xp] - a[y * w + xm] + b[y * w + xp] - b[y * w + xm]);
            iy[i] = 0.25 * (a[yp * w + x] - a[ym * w + x] + b[yp * w + x] - b[ym * w + x]);
            it[i] = b[i] - a[i];
        }
    }
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut ubar = vec![0.0; n];
    let mut vbar = vec![0.0; n];
    for _ in 0..iterations {
        neighborhood_average(&u, h, w, &mut ubar);
        neighborhood_average(&v, h, w, &mut vbar);
        for i in 0..n {
            let denom = alpha2 + ix[i] * ix[i] + iy[i] * iy[i];
            let d = (ix[i] * ubar[i] + iy[i] * vbar[i] + it[i]) / denom;
            u[i] = ubar[i] - ix[i] * d;
            v[i] = vbar[i] - iy[i] * d;
        }
    }
    (u, v)
}

/// Horn–Schunck weighted neighborhood mean: 1/6 for edge neighbors, 1/12 for
/// diagonals, with border replication.
fn neighborhood_average(f: &[f64], h: usize, w: usize, out: &mut [f64]) {
    let cl = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    for y in 0..h {
        for x in 0..w {
            let (xm, xp) = (cl(x as isize - 1, w), cl(x as isize + 1, w));
            let (ym, yp) = (cl(y as isize - 1, h), cl(y as isize + 1, h));
            let edges = f[y * w + xm] + f[y * w + xp] + f[ym * w + x] + f[yp * w + x];
            let diags = f[ym * w + xm] + f[ym * w + xp] + f[yp * w + xm] + f[yp * w + xp];
            out[y * w + x] = edges / 6.0 + diags / 12.0;
        }
    }
}
