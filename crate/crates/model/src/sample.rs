//! Reverse-diffusion sampling and the temporal-consistency metric.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use latentmotion_flow::Frame;
use latentmotion_tensor::Tensor;

use crate::config::TrainConfig;
use crate::denoiser::denoiser_forward;
use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::schedule::{ddim_sample, NoiseSchedule};

/// Turn a clean latent `[1, c, frames, h, w]` into grayscale frames: each
/// frame is its channel mean, then the whole clip is min-max mapped to [0, 1]
/// with one shared affine so relative brightness across frames survives. A
/// flat clip (range below 1e-12) maps to mid-gray.
pub fn decode_video(z: &Tensor) -> Result<Vec<Frame>> {
    let shape = z.shape();
    if shape.len() != 5 || shape[0] != 1 {
        return Err(ModelError::Contract(format!(
            "decode expects [1, c, frames, h, w], got {shape:?}"
        )));
    }
    let (c, n, h, w) = (shape[1], shape[2], shape[3], shape[4]);
    if c == 0 || n == 0 {
        return Err(ModelError::Contract("decode needs ≥ 1 channel and ≥ 1 frame".into()));
    }
    let data = z.data();
    let mut luma: Vec<Vec<f64>> = Vec::with_capacity(n);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for frame in 0..n {
        let mut img = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for ch in 0..c {
                    acc += data[((ch * n + frame) * h + y) * w + x];
                }
                let v = acc / c as f64;
                if !v.is_finite() {
                    return Err(ModelError::Numeric(format!(
                        "non-finite latent at frame {frame}, pixel ({y}, {x})"
                    )));
                }
                lo = lo.min(v);
                hi = hi.max(v);
                img[y * w + x] = v;
            }
        }
        luma.push(img);
    }
    let range = hi - lo;
    let mut frames = Vec::with_capacity(n);
    for img in luma {
        let mapped: Vec<f64> = if range < 1e-12 {
            vec![0.5; h * w]
        } else {
            img.iter().map(|v| ((v - lo) / range).clamp(0.0, 1.0)).collect()
        };
        frames.push(Frame::new(Tensor::from_vec(mapped, &[h, w])?)?);
    }
    Ok(frames)
}

/// Generate the N diffusion frames for `cond_id`: seeded Gaussian start
/// noise, subsampled reverse diffusion through the full denoiser, then
/// grayscale decoding. No interpolation — see [`sample_video`].
pub fn generate_clip(
    params: &ModelParams,
    cfg: &TrainConfig,
    cond_id: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<Frame>> {
    cfg.validate()?;
    if cond_id >= params.image.num_conditions() {
        return Err(ModelError::Lookup(format!(
            "condition {cond_id} out of range (model has {})",
            params.image.num_conditions()
        )));
    }
    let (c, n, h, w) = (cfg.channels, cfg.frames, cfg.height, cfg.width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = (0..c * n * h * w).map(|_| StandardNormal.sample(&mut rng)).collect();
    let z_noise = Tensor::from_vec(start, &[1, c, n, h, w])?;

    let sched = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)?;
    let z0 = ddim_sample(
        |z, t| {
            denoiser_forward(
                z,
                t,
                cond_id,
                &params.image,
                &params.motion,
                cfg.enable_versatile,
                cfg.enable_sparse_causal,
            )
        },
        &z_noise,
        steps,
        &sched,
    )?;
    decode_video(&z0)
}

/// Full inference: generate N frames, then double the frame rate by flow
/// projection, returning 2N−1 frames with the originals at even slots.
pub fn sample_video(
    params: &ModelParams,
    cfg: &TrainConfig,
    cond_id: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<Frame>> {
    let clip = generate_clip(params, cfg, cond_id, steps, seed)?;
    Ok(latentmotion_flow::interpolate_sequence(&clip, &latentmotion_flow::FlowConfig::default())?)
}

/// Mean temporal consistency over consecutive frame pairs: each frame is
/// flattened and mean-centered, pairs are compared by cosine. Centering makes
/// the score contrast-based — a photometric negative scores exactly −1 even
/// though raw pixel vectors in [0, 1] could never be anti-parallel. Two flat
/// frames count as perfectly consistent; a flat frame against a structured
/// one counts as zero.
pub fn eval_temporal_consistency(frames: &[Frame]) -> Result<f64> {
    if frames.len() < 2 {
        return Err(ModelError::Contract("consistency needs at least two frames".into()));
    }
    let (h, w) = (frames[0].height(), frames[0].width());
    let centered: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| {
            let v = f.pixels();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| x - mean).collect()
        })
        .collect();
    for f in frames {
        if f.height() != h || f.width() != w {
            return Err(ModelError::Contract("consistency frames must share one size".into()));
        }
    }
    let mut total = 0.0;
    for pair in centered.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        total += if na < 1e-12 && nb < 1e-12 {
            1.0
        } else if na < 1e-12 || nb < 1e-12 {
            0.0
        } else {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            dot / (na * nb)
        };
    }
    Ok(total / (frames.len() - 1) as f64)
}
