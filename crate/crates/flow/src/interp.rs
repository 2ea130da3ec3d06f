//! Flow-projection frame interpolation: the per-pixel distance map, mid-frame
//! synthesis by two-sided forward splatting, and N → 2N−1 sequence expansion.

use latentmotion_tensor::Tensor;

use crate::error::{FlowError, Result};
use crate::frame::{FlowField, Frame};
use crate::hs::{estimate_flow, FlowConfig};

/// Adjacent-frame flow magnitudes below this count as "no motion" and take
/// the neutral fallback D = 1.
pub const FLOW_EPS: f64 = 1e-3;

/// Per-pixel ratio of long-range motion projected onto adjacent-frame motion.
#[derive(Clone)]
pub struct DistanceMap {
    pub d: Tensor, // [h, w]
}

/// D = (V_long · V_adj) / ‖V_adj‖², the projection of the long-range flow
/// onto the adjacent-frame flow in units of the adjacent step; pixels with
/// ‖V_adj‖ < [`FLOW_EPS`] fall back to D = 1.
pub fn distance_map(v_long: &FlowField, v_adj: &FlowField) -> Result<DistanceMap> {
    if v_long.height() != v_adj.height() || v_long.width() != v_adj.width() {
        return Err(FlowError::ShapeMismatch {
            op: "distance_map",
            lhs: v_long.u.shape(),
            rhs: v_adj.u.shape(),
        });
    }
    let (lu, lv) = (v_long.u.data(), v_long.v.data());
    let (au, av) = (v_adj.u.data(), v_adj.v.data());
    let d: Vec<f64> = (0..lu.len())
        .map(|i| {
            let mag2 = au[i] * au[i] + av[i] * av[i];
            if mag2 < FLOW_EPS * FLOW_EPS {
                1.0
            } else {
                (lu[i] * au[i] + lv[i] * av[i]) / mag2
            }
        })
        .collect();
    Ok(DistanceMap { d: Tensor::from_vec(d, &[v_long.height(), v_long.width()])? })
}

/// Median of a finite slice (mean of the two middle values for even lengths).
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Synthesize the frame halfway between `i_t` and `i_t1`.
///
/// Each pixel of `i_t` is forward-splatted along `+0.5·w(D)·V` and each pixel
/// of `i_t1` along `−0.5·w(D)·V`, where `w(D) = clamp(D / median(D), 0.5, 1.5)`
/// scales the step by how far the pixel still has to travel relative to the
/// rest of the frame. Splats land with bilinear weights; pixels that receive
/// no mass are filled with the average of the two source frames.
pub fn synthesize_midframe(
    i_t: &Frame,
    i_t1: &Frame,
    v_adj: &FlowField,
    d: &DistanceMap,
) -> Result<Frame> {
    let (h, w) = (i_t.height(), i_t.width());
    if i_t1.height() != h || i_t1.width() != w || v_adj.height() != h || v_adj.width() != w {
        return Err(FlowError::ShapeMismatch {
            op: "synthesize_midframe",
            lhs: vec![h, w],
            rhs: vec![i_t1.height(), i_t1.width()],
        });
    }
    let dmap = d.d.data();
    if dmap.len() != h * w {
        return Err(FlowError::ShapeMismatch { op: "synthesize_midframe", lhs: vec![h, w], rhs: d.d.shape() });
    }
    let med = median(&dmap);
    let weight: Vec<f64> = if med.abs() < 1e-9 {
        vec![1.0; h * w]
    } else {
        dmap.iter().map(|&x| (x / med).clamp(0.5, 1.5)).collect()
    };

    let (fu, fv) = (v_adj.u.data(), v_adj.v.data());
    let (src_a, src_b) = (i_t.pixels(), i_t1.pixels());
    let mut num = vec![0.0; h * w];
    let mut den = vec![0.0; h * w];
    let mut splat = |px: f64, py: f64, val: f64| {
        let x0 = px.floor();
        let y0 = py.floor();
        let (fx, fy) = (px - x0, py - y0);
        for (dx, dy, wgt) in [
            (0.0, 0.0, (1.0 - fx) * (1.0 - fy)),
            (1.0, 0.0, fx * (1.0 - fy)),
            (0.0, 1.0, (1.0 - fx) * fy),
            (1.0, 1.0, fx * fy),
        ] {
            let (tx, ty) = (x0 + dx, y0 + dy);
            if wgt > 0.0 && tx >= 0.0 && ty >= 0.0 && (tx as usize) < w && (ty as usize) < h {
                let idx = ty as usize * w + tx as usize;
                num[idx] += wgt * val;
                den[idx] += wgt;
            }
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let step = 0.5 * weight[i];
            splat(x as f64 + step * fu[i], y as f64 + step * fv[i], src_a[i]);
            splat(x as f64 - step * fu[i], y as f64 - step * fv[i], src_b[i]);
        }
    }
    let mid: Vec<f64> = (0..h * w)
        .map(|i| {
            if den[i] > 1e-12 {
                (num[i] / den[i]).clamp(0.0, 1.0)
            } else {
                0.5 * (src_a[i] + src_b[i])
            }
        })
        .collect();
    Frame::new(Tensor::from_vec(mid, &[h, w])?)
}

/// Expand N frames to 2N−1 by inserting a synthesized frame between each
/// adjacent pair. Originals are passed through untouched at the odd (1-based)
/// output positions. The long-range flow for each insertion runs from the
/// earlier frame of the pair to the last original frame.
pub fn interpolate_sequence(frames: &[Frame], cfg: &FlowConfig) -> Result<Vec<Frame>> {
    if frames.len() < 2 {
        return Err(FlowError::Contract(format!(
            "interpolation needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let (h, w) = (frames[0].height(), frames[0].width());
    for f in frames {
        if f.height() != h || f.width() != w {
            return Err(FlowError::ShapeMismatch {
                op: "interpolate_sequence",
                lhs: vec![h, w],
                rhs: vec![f.height(), f.width()],
            });
        }
    }
    let last = frames.last().unwrap();
    let mut out = Vec::with_capacity(2 * frames.len() - 1);
    for t in 0..frames.len() - 1 {
        let v_adj = estimate_flow(&frames[t], &frames[t + 1], cfg)?;
        let v_long = estimate_flow(&frames[t], last, cfg)?;
        let d = distance_map(&v_long, &v_adj)?;
        let mid = synthesize_midframe(&frames[t], &frames[t + 1], &v_adj, &d)?;
        out.push(frames[t].clone());
        out.push(mid);
    }
    out.push(last.clone());
    Ok(out)
}
