//! Sampling pipeline: latent decoding, determinism, interpolation count, and
//! the temporal-consistency metric.

use latentmotion_flow::Frame;
use latentmotion_model::{
    decode_video, eval_temporal_consistency, generate_clip, sample_video, ModelParams,
    TrainConfig,
};
use latentmotion_tensor::Tensor;

fn sample_cfg() -> TrainConfig {
    TrainConfig {
        frames: 4,
        channels: 1,
        height: 8,
        width: 8,
        inner_dim: 4,
        heads: 1,
        layers: 1,
        negative_threshold: 1,
        diffusion_steps: 50,
        num_conditions: 2,
        dataset_size: 2,
        adapter_hidden: 6,
        embed_dim: 3,
        ..TrainConfig::default()
    }
}

// ── decoding ─────────────────────────────────────────────────────────

#[test]
fn decode_maps_channel_mean_through_one_shared_affine() {
    // Two channels whose mean runs 0..127 over a 2-frame 8×8 clip.
    let (c, n, h, w) = (2, 2, 8, 8);
    let mut data = vec![0.0; c * n * h * w];
    for frame in 0..n {
        for y in 0..h {
            for x in 0..w {
                let v = (frame * h * w + y * w + x) as f64;
                // Channel 0 sits at offset 0·n+frame, channel 1 at 1·n+frame.
                data[((frame) * h + y) * w + x] = v - 1.0;
                data[((n + frame) * h + y) * w + x] = v + 1.0;
            }
        }
    }
    let z = Tensor::from_vec(data, &[1, c, n, h, w]).unwrap();
    let frames = decode_video(&z).unwrap();
    assert_eq!(frames.len(), 2);
    // Channel mean is v, global range is 0..=127.
    let first = frames[0].pixels();
    let second = frames[1].pixels();
    for (i, px) in first.iter().enumerate() {
        assert!((px - i as f64 / 127.0).abs() < 1e-12);
    }
    assert_eq!(second[h * w - 1], 1.0, "global max maps to white");
    assert_eq!(first[0], 0.0, "global min maps to black");
}

#[test]
fn decode_maps_flat_clips_to_mid_gray() {
    let z = Tensor::full(&[1, 1, 2, 8, 8], 0.37);
    let frames = decode_video(&z).unwrap();
    for f in &frames {
        assert!(f.pixels().iter().all(|&v| v == 0.5));
    }
}

#[test]
fn decode_rejects_bad_shapes_and_non_finite_values() {
    assert!(decode_video(&Tensor::zeros(&[1, 1, 2, 8])).is_err());
    assert!(decode_video(&Tensor::zeros(&[2, 1, 2, 8, 8])).is_err());
    let mut data = vec![0.0; 64 * 2];
    data[5] = f64::NAN;
    let z = Tensor::from_vec(data, &[1, 1, 2, 8, 8]).unwrap();
    assert!(decode_video(&z).is_err());
}

// ── consistency metric ───────────────────────────────────────────────

fn gradient_frame(h: usize, w: usize) -> Frame {
    Frame::from_fn(h, w, |y, x| (x + y) as f64 / (h + w - 2) as f64).unwrap()
}

#[test]
fn identical_frames_score_one() {
    let f = gradient_frame(8, 8);
    let score = eval_temporal_consistency(&[f.clone(), f.clone(), f]).unwrap();
    assert!((score - 1.0).abs() < 1e-12);
}

#[test]
fn photometric_negative_scores_minus_one() {
    let f = gradient_frame(8, 8);
    let neg = Frame::from_fn(8, 8, |y, x| 1.0 - f.pixels()[y * 8 + x]).unwrap();
    let score = eval_temporal_consistency(&[f, neg]).unwrap();
    assert!((score + 1.0).abs() < 1e-12);
}

#[test]
fn flat_frames_count_as_consistent() {
    let a = Frame::from_fn(8, 8, |_, _| 0.3).unwrap();
    let b = Frame::from_fn(8, 8, |_, _| 0.9).unwrap();
    let score = eval_temporal_consistency(&[a, b]).unwrap();
    assert_eq!(score, 1.0);
}

#[test]
fn consistency_needs_two_equal_sized_frames() {
    let f = gradient_frame(8, 8);
    assert!(eval_temporal_consistency(std::slice::from_ref(&f)).is_err());
    let other = gradient_frame(8, 10);
    assert!(eval_temporal_consistency(&[f, other]).is_err());
}

// ── sampling ─────────────────────────────────────────────────────────

#[test]
fn generation_is_seed_deterministic() {
    let cfg = sample_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let a = generate_clip(&params, &cfg, 0, 5, 11).unwrap();
    let b = generate_clip(&params, &cfg, 0, 5, 11).unwrap();
    assert_eq!(a.len(), cfg.frames);
    for (fa, fb) in a.iter().zip(&b) {
        let pa = fa.pixels();
        let pb = fb.pixels();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    let c = generate_clip(&params, &cfg, 0, 5, 12).unwrap();
    assert_ne!(a[0].pixels(), c[0].pixels(), "different seed, different clip");
}

#[test]
fn sampled_frames_stay_in_unit_range() {
    let cfg = sample_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let frames = generate_clip(&params, &cfg, 1, 5, 3).unwrap();
    for f in &frames {
        assert_eq!(f.height(), cfg.height);
        assert_eq!(f.width(), cfg.width);
        assert!(f.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn sample_video_doubles_the_frame_rate_keeping_originals() {
    let cfg = sample_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let clip = generate_clip(&params, &cfg, 0, 5, 21).unwrap();
    let full = sample_video(&params, &cfg, 0, 5, 21).unwrap();
    assert_eq!(full.len(), 2 * cfg.frames - 1);
    for (i, original) in clip.iter().enumerate() {
        let kept = &full[2 * i];
        let pa = original.pixels();
        let pb = kept.pixels();
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(x.to_bits(), y.to_bits(), "original {i} must be preserved bit-exactly");
        }
    }
}

#[test]
fn unknown_condition_is_rejected() {
    let cfg = sample_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    assert!(sample_video(&params, &cfg, 9, 5, 0).is_err());
}

#[test]
fn interpolation_does_not_reduce_temporal_consistency() {
    let cfg = sample_cfg();
    let params = ModelParams::init(&cfg).unwrap();
    let clip = generate_clip(&params, &cfg, 0, 5, 2).unwrap();
    let full = sample_video(&params, &cfg, 0, 5, 2).unwrap();
    let base = eval_temporal_consistency(&clip).unwrap();
    let smoothed = eval_temporal_consistency(&full).unwrap();
    assert!(
        smoothed >= base,
        "interpolated {smoothed} must be at least uninterpolated {base}"
    );
}
