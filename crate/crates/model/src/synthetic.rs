//! Procedurally generated training videos: a Gaussian blob translating at
//! constant velocity, direction chosen by the conditioning class.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use latentmotion_tensor::Tensor;

use crate::config::TrainConfig;
use crate::error::{ModelError, Result};

/// One training example: a video latent [1, c, N, h, w] with values in
/// [−1, 1] and its motion-direction class.
#[derive(Clone)]
pub struct SyntheticSample {
    pub video: Tensor,
    pub cond_id: usize,
}

/// Unit direction for a conditioning class: angles spread uniformly over the
/// circle, class 0 pointing right (+x).
pub fn condition_direction(cond_id: usize, num_conditions: usize) -> (f64, f64) {
    let angle = std::f64::consts::TAU * cond_id as f64 / num_conditions as f64;
    (angle.cos(), angle.sin())
}

/// Deterministic dataset of `count` samples cycling through the condition
/// classes. Each video is a soft blob crossing the frame along its class
/// direction at constant velocity, with a small random jitter on the start
/// position so samples within a class differ.
pub fn gen_synthetic_dataset(count: usize, cfg: &TrainConfig, seed: u64) -> Result<Vec<SyntheticSample>> {
    if count < 1 {
        return Err(ModelError::Contract("dataset needs count ≥ 1".into()));
    }
    let (c, n, h, w) = (cfg.channels, cfg.frames, cfg.height, cfg.width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (h.min(w) as f64) / 6.0;
    // travel distance chosen so the blob stays comfortably inside the frame
    let span = (h.min(w) as f64) - 2.0 * sigma - 2.0;
    let velocity = if n > 1 { span.max(1.0) / (n - 1) as f64 } else { 0.0 };

    let mut samples = Vec::with_capacity(count);
    for idx in 0..count {
        let cond_id = idx % cfg.num_conditions;
        let (dx, dy) = condition_direction(cond_id, cfg.num_conditions);
        let jx: f64 = rng.random_range(-1.0..1.0);
        let jy: f64 = rng.random_range(-1.0..1.0);
        let cx0 = w as f64 / 2.0 - dx * velocity * (n - 1) as f64 / 2.0 + jx;
        let cy0 = h as f64 / 2.0 - dy * velocity * (n - 1) as f64 / 2.0 + jy;

        let mut data = vec![0.0; c * n * h * w];
        for frame in 0..n {
            let cx = cx0 + dx * velocity * frame as f64;
            let cy = cy0 + dy * velocity * frame as f64;
            for y in 0..h {
                for x in 0..w {
                    let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    let blob = (-r2 / (2.0 * sigma * sigma)).exp();
                    for ch in 0..c {
                        // distinct positive amplitude per channel keeps the
                        // channel-mean rendering informative
                        let amp = 1.0 / (ch + 1) as f64;
                        data[((ch * n + frame) * h + y) * w + x] = amp * blob;
                    }
                }
            }
        }
        let video = Tensor::from_vec(data, &[1, c, n, h, w])?;
        samples.push(SyntheticSample { video, cond_id });
    }
    Ok(samples)
}

/// Luminance centroid of one frame of a video latent (channel-mean weights),
/// as (x, y). Used by tests and the drift evaluation.
pub fn frame_centroid(video: &Tensor, frame: usize) -> (f64, f64) {
    let shape = video.shape();
    let (c, n, h, w) = (shape[1], shape[2], shape[3], shape[4]);
    assert!(frame < n, "frame {frame} out of range");
    video.with_data(|d| {
        let (mut sx, mut sy, mut total) = (0.0, 0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let mut lum = 0.0;
                for ch in 0..c {
                    lum += d[((ch * n + frame) * h + y) * w + x];
                }
                lum /= c as f64;
                sx += lum * x as f64;
                sy += lum * y as f64;
                total += lum;
            }
        }
        if total.abs() < 1e-12 {
            (w as f64 / 2.0, h as f64 / 2.0)
        } else {
            (sx / total, sy / total)
        }
    })
}
