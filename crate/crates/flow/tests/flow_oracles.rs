//! Flow and interpolation oracles: synthetic-shift flow accuracy, projection
//! algebra, mid-frame fidelity against analytic warps, and PGM round-trips.

use latentmotion_tensor::Tensor;

use latentmotion_flow::{
    distance_map, estimate_flow, interpolate_sequence, synthesize_midframe, FlowConfig, FlowField,
    Frame,
};

const W: usize = 32;
const H: usize = 32;

/// Smooth synthetic pattern with gradients in both axes; `shift` moves it
/// right by that many pixels.
fn pattern(shift: f64) -> Frame {
    Frame::from_fn(H, W, |x, y| {
        let xf = x as f64 - shift;
        let yf = y as f64;
        0.5 + 0.2 * (xf * std::f64::consts::TAU / 16.0).sin()
            + 0.15 * (yf * std::f64::consts::TAU / 12.0).cos()
            + 0.1 * ((xf + yf) * std::f64::consts::TAU / 20.0).sin()
    })
    .unwrap()
}

/// Mean over pixels at least `margin` away from every border.
fn interior_mean(values: &[f64], h: usize, w: usize, margin: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0;
    for y in margin..h - margin {
        for x in margin..w - margin {
            sum += f(values[y * w + x]);
            count += 1;
        }
    }
    sum / count as f64
}

fn uniform_field(u: f64, v: f64) -> FlowField {
    FlowField::new(Tensor::full(&[H, W], u), Tensor::full(&[H, W], v)).unwrap()
}

fn psnr(a: &Frame, b: &Frame, margin: usize) -> f64 {
    let (pa, pb) = (a.pixels(), b.pixels());
    let mut se = 0.0;
    let mut count = 0;
    for y in margin..H - margin {
        for x in margin..W - margin {
            let d = pa[y * W + x] - pb[y * W + x];
            se += d * d;
            count += 1;
        }
    }
    10.0 * (count as f64 / se).log10()
}

// ── flow estimation ──────────────────────────────────────────────────

#[test]
fn identical_frames_give_zero_flow() {
    let a = pattern(0.0);
    let flow = estimate_flow(&a, &a, &FlowConfig::default()).unwrap();
    let max_u = flow.u.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_v = flow.v.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max_u < 0.05 && max_v < 0.05, "residual flow u={max_u} v={max_v}");
}

#[test]
fn one_pixel_shift_is_recovered() {
    let a = pattern(0.0);
    let b = pattern(1.0);
    let flow = estimate_flow(&a, &b, &FlowConfig::default()).unwrap();
    let mean_u = interior_mean(&flow.u.data(), H, W, 4, |v| v);
    let mean_abs_v = interior_mean(&flow.v.data(), H, W, 4, f64::abs);
    assert!((0.8..=1.2).contains(&mean_u), "interior mean u = {mean_u}");
    assert!(mean_abs_v < 0.2, "interior mean |v| = {mean_abs_v}");
}

#[test]
fn flow_is_antisymmetric_on_smooth_shift() {
    let a = pattern(0.0);
    let b = pattern(1.0);
    let cfg = FlowConfig::default();
    let fwd = estimate_flow(&a, &b, &cfg).unwrap();
    let bwd = estimate_flow(&b, &a, &cfg).unwrap();
    let (fu, bu) = (fwd.u.data(), bwd.u.data());
    let (fv, bv) = (fwd.v.data(), bwd.v.data());
    for y in 4..H - 4 {
        for x in 4..W - 4 {
            let i = y * W + x;
            assert!((fu[i] + bu[i]).abs() < 0.3, "u antisymmetry at ({x},{y}): {} vs {}", fu[i], bu[i]);
            assert!((fv[i] + bv[i]).abs() < 0.3, "v antisymmetry at ({x},{y}): {} vs {}", fv[i], bv[i]);
        }
    }
}

#[test]
fn flow_estimation_is_deterministic() {
    let a = pattern(0.0);
    let b = pattern(1.0);
    let cfg = FlowConfig::default();
    let f1 = estimate_flow(&a, &b, &cfg).unwrap();
    let f2 = estimate_flow(&a, &b, &cfg).unwrap();
    let (u1, u2) = (f1.u.data(), f2.u.data());
    assert!(u1.iter().zip(&u2).all(|(a, b)| a.to_bits() == b.to_bits()));
}

// ── distance map ─────────────────────────────────────────────────────

#[test]
fn colinear_flows_give_projection_ratio() {
    let d = distance_map(&uniform_field(2.0, 0.0), &uniform_field(1.0, 0.0)).unwrap();
    assert!(d.d.data().iter().all(|&v| (v - 2.0).abs() < 1e-15));
}

#[test]
fn orthogonal_flows_give_zero() {
    let d = distance_map(&uniform_field(0.0, 3.0), &uniform_field(1.0, 0.0)).unwrap();
    assert!(d.d.data().iter().all(|&v| v.abs() < 1e-15));
}

#[test]
fn vanishing_adjacent_flow_falls_back_to_one() {
    let d = distance_map(&uniform_field(2.0, 1.0), &uniform_field(0.0, 0.0)).unwrap();
    assert!(d.d.data().iter().all(|&v| v == 1.0));
}

#[test]
fn distance_map_scaling_laws() {
    // D(kA, B) = k·D(A, B) and D(A, kB) = D(A, B)/k for k > 0, away from the
    // fallback region.
    let a = uniform_field(1.5, -0.5);
    let b = uniform_field(0.5, 1.0);
    let base = distance_map(&a, &b).unwrap().d.data();
    for k in [0.5, 2.0, 7.0] {
        let ka = uniform_field(1.5 * k, -0.5 * k);
        let kb = uniform_field(0.5 * k, 1.0 * k);
        let scaled_long = distance_map(&ka, &b).unwrap().d.data();
        let scaled_adj = distance_map(&a, &kb).unwrap().d.data();
        for i in 0..base.len() {
            assert!((scaled_long[i] - k * base[i]).abs() < 1e-12);
            assert!((scaled_adj[i] - base[i] / k).abs() < 1e-12);
        }
    }
}

// ── mid-frame synthesis ──────────────────────────────────────────────

#[test]
fn zero_flow_identical_frames_reproduce_the_frame() {
    let a = pattern(0.0);
    let flow = uniform_field(0.0, 0.0);
    let d = distance_map(&flow, &flow).unwrap();
    let mid = synthesize_midframe(&a, &a, &flow, &d).unwrap();
    let (pa, pm) = (a.pixels(), mid.pixels());
    assert!(pa.iter().zip(&pm).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn two_pixel_shift_midframe_matches_analytic_one_pixel_shift() {
    let a = pattern(0.0);
    let b = pattern(2.0);
    let truth = pattern(1.0);
    let flow = estimate_flow(&a, &b, &FlowConfig::default()).unwrap();
    let long = estimate_flow(&a, &b, &FlowConfig::default()).unwrap();
    let d = distance_map(&long, &flow).unwrap();
    let mid = synthesize_midframe(&a, &b, &flow, &d).unwrap();
    let diff: Vec<f64> = mid
        .pixels()
        .iter()
        .zip(&truth.pixels())
        .map(|(m, t)| m - t)
        .collect();
    let mae = interior_mean(&diff, H, W, 4, f64::abs);
    assert!(mae < 0.02, "interior mean abs error {mae}");
}

#[test]
fn midframe_is_symmetric_under_time_reversal() {
    let a = pattern(0.0);
    let b = pattern(2.0);
    let cfg = FlowConfig::default();
    let fwd = estimate_flow(&a, &b, &cfg).unwrap();
    let bwd = estimate_flow(&b, &a, &cfg).unwrap();
    let d_fwd = distance_map(&fwd, &fwd).unwrap();
    let d_bwd = distance_map(&bwd, &bwd).unwrap();
    let mid_fwd = synthesize_midframe(&a, &b, &fwd, &d_fwd).unwrap();
    let mid_bwd = synthesize_midframe(&b, &a, &bwd, &d_bwd).unwrap();
    let diff: Vec<f64> = mid_fwd
        .pixels()
        .iter()
        .zip(&mid_bwd.pixels())
        .map(|(x, y)| x - y)
        .collect();
    let mae = interior_mean(&diff, H, W, 4, f64::abs);
    assert!(mae < 0.02, "time-reversal asymmetry {mae}");
}

#[test]
fn midframe_beats_frame_average_baseline_in_psnr() {
    let a = pattern(0.0);
    let b = pattern(2.0);
    let truth = pattern(1.0);
    let flow = estimate_flow(&a, &b, &FlowConfig::default()).unwrap();
    let d = distance_map(&flow, &flow).unwrap();
    let mid = synthesize_midframe(&a, &b, &flow, &d).unwrap();
    let avg_pixels: Vec<f64> = a
        .pixels()
        .iter()
        .zip(&b.pixels())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let avg = Frame::new(Tensor::from_vec(avg_pixels, &[H, W]).unwrap()).unwrap();
    let psnr_mid = psnr(&mid, &truth, 4);
    let psnr_avg = psnr(&avg, &truth, 4);
    assert!(
        psnr_mid > psnr_avg,
        "interpolator ({psnr_mid} dB) must beat naive blending ({psnr_avg} dB)"
    );
}

// ── sequence expansion ───────────────────────────────────────────────

#[test]
fn sequence_expansion_length_law() {
    let cfg = FlowConfig::default();
    for n in [2usize, 4, 8] {
        let frames: Vec<Frame> = (0..n).map(|t| pattern(t as f64)).collect();
        let out = interpolate_sequence(&frames, &cfg).unwrap();
        assert_eq!(out.len(), 2 * n - 1);
        for (t, f) in frames.iter().enumerate() {
            let orig = f.pixels();
            let kept = out[2 * t].pixels();
            assert!(
                orig.iter().zip(&kept).all(|(a, b)| a.to_bits() == b.to_bits()),
                "original frame {t} altered"
            );
        }
    }
    assert!(interpolate_sequence(&[pattern(0.0)], &cfg).is_err());
}

#[test]
fn sequence_expansion_is_deterministic() {
    let cfg = FlowConfig::default();
    let frames: Vec<Frame> = (0..4).map(|t| pattern(t as f64)).collect();
    let out1 = interpolate_sequence(&frames, &cfg).unwrap();
    let out2 = interpolate_sequence(&frames, &cfg).unwrap();
    for (f1, f2) in out1.iter().zip(&out2) {
        let (p1, p2) = (f1.pixels(), f2.pixels());
        assert!(p1.iter().zip(&p2).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

// ── frames and PGM ───────────────────────────────────────────────────

#[test]
fn frame_validation_rejects_bad_inputs() {
    assert!(Frame::new(Tensor::zeros(&[4, 4])).is_err(), "too small");
    assert!(Frame::new(Tensor::zeros(&[8])).is_err(), "wrong rank");
    assert!(Frame::new(Tensor::full(&[8, 8], 1.5)).is_err(), "out of range");
    assert!(Frame::new(Tensor::full(&[8, 8], 0.5)).is_ok());
}

#[test]
fn pgm_round_trip_preserves_quantized_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.pgm");
    let frame = pattern(0.5);
    frame.write_pgm(&path).unwrap();
    let back = Frame::read_pgm(&path).unwrap();
    assert_eq!(back.height(), H);
    assert_eq!(back.width(), W);
    // one 8-bit quantization step of slack
    for (a, b) in frame.pixels().iter().zip(&back.pixels()) {
        assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
    }
    // a reread is bit-identical to the first read
    let again = Frame::read_pgm(&path).unwrap();
    assert!(back
        .pixels()
        .iter()
        .zip(&again.pixels())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn pgm_reader_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad_magic = dir.path().join("bad.pgm");
    std::fs::write(&bad_magic, b"P2\n8 8\n255\n").unwrap();
    assert!(Frame::read_pgm(&bad_magic).is_err());

    let truncated = dir.path().join("trunc.pgm");
    std::fs::write(&truncated, b"P5\n8 8\n255\n0123").unwrap();
    assert!(Frame::read_pgm(&truncated).is_err());

    let comment = dir.path().join("comment.pgm");
    let mut bytes = b"P5\n# a comment line\n8 8\n255\n".to_vec();
    bytes.extend(std::iter::repeat_n(128u8, 64));
    std::fs::write(&comment, &bytes).unwrap();
    let f = Frame::read_pgm(&comment).unwrap();
    assert_eq!((f.height(), f.width()), (8, 8));
}
