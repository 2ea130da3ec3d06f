//! The layered noise predictor: frozen per-frame channel mixers standing in
//! for a pre-trained image backbone, interleaved with trainable motion
//! blocks. Only the motion blocks (and the noise adapter elsewhere) learn.

use latentmotion_tensor::Tensor;

use crate::error::{ModelError, Result};
use crate::motion::{motion_block_forward, MotionModuleParams};

/// Width of the sinusoidal timestep embedding.
pub const TIME_EMBED_DIM: usize = 16;
/// Width of the conditioning embeddings in the lookup table.
pub const COND_EMBED_DIM: usize = 16;
/// Hidden width of each frozen per-pixel channel mixer.
pub const MIXER_HIDDEN: usize = 8;
/// Per-pixel spatial feature width: sin/cos of x and y grid angles.
pub const SPATIAL_FEATURES: usize = 4;

/// One frozen per-frame layer: a residual two-layer per-pixel channel mixer
/// whose hidden activations also receive projected timestep, conditioning,
/// and spatial-position features.
#[derive(Clone)]
pub struct FrozenLayer {
    pub w1: Tensor, // [channels, hidden]
    pub wp: Tensor, // [SPATIAL_FEATURES, hidden]
    pub wt: Tensor, // [TIME_EMBED_DIM, hidden]
    pub wc: Tensor, // [COND_EMBED_DIM, hidden]
    pub b1: Tensor, // [hidden]
    pub w2: Tensor, // [hidden, channels]
    pub b2: Tensor, // [channels]
}

/// The complete frozen stand-in for the image backbone. Every tensor here
/// has `requires_grad == false`.
#[derive(Clone)]
pub struct ImageLayerParams {
    pub layers: Vec<FrozenLayer>,
    /// Embedding table over conditioning classes, [num_conditions, COND_EMBED_DIM].
    pub cond_table: Tensor,
    /// Fixed sinusoidal grid features, [h·w, SPATIAL_FEATURES].
    pub pos_features: Tensor,
}

impl ImageLayerParams {
    pub fn num_conditions(&self) -> usize {
        self.cond_table.shape()[0]
    }
}

/// Sinusoidal embedding of an integer timestep, [dim].
pub fn time_embedding(t: usize, dim: usize) -> Tensor {
    let mut data = vec![0.0; dim];
    for (i, v) in data.iter_mut().enumerate() {
        let freq = 10000f64.powf(-((i / 2 * 2) as f64) / dim as f64);
        let angle = t as f64 * freq;
        *v = if i % 2 == 0 { angle.sin() } else { angle.cos() };
    }
    Tensor::from_vec(data, &[dim]).expect("static shape")
}

/// Fixed per-pixel grid features [h·w, 4]: sin/cos of the x and y grid
/// angles. They break the spatial permutation symmetry of the per-pixel
/// mixers so direction-conditioned motion is expressible at all.
pub fn spatial_position_features(h: usize, w: usize) -> Tensor {
    let mut data = vec![0.0; h * w * SPATIAL_FEATURES];
    for y in 0..h {
        for x in 0..w {
            let ax = x as f64 * std::f64::consts::TAU / w as f64;
            let ay = y as f64 * std::f64::consts::TAU / h as f64;
            let row = (y * w + x) * SPATIAL_FEATURES;
            data[row] = ax.sin();
            data[row + 1] = ax.cos();
            data[row + 2] = ay.sin();
            data[row + 3] = ay.cos();
        }
    }
    Tensor::from_vec(data, &[h * w, SPATIAL_FEATURES]).expect("static shape")
}

/// Smooth, strictly monotone nonlinearity composed from the core op set:
/// f(x) = x + 0.5·(√(x²+1) − 1), with f′ ∈ (0.5, 1.5) everywhere.
pub fn bent_identity(x: &Tensor) -> Result<Tensor> {
    let curved = x.square().add_scalar(1.0).sqrt()?.add_scalar(-1.0).scale(0.5);
    Ok(x.add(&curved)?)
}

/// Apply frozen layer `idx` to a video tensor [b, c, N, h, w].
pub fn frozen_layer_forward(
    v: &Tensor,
    image: &ImageLayerParams,
    idx: usize,
    t: usize,
    cond_id: usize,
) -> Result<Tensor> {
    let shape = v.shape();
    if shape.len() != 5 {
        return Err(ModelError::Contract(format!(
            "frozen layer expects [b, c, frames, h, w], got {:?}",
            shape
        )));
    }
    let (b, c, n, h, w) = (shape[0], shape[1], shape[2], shape[3], shape[4]);
    let layer = image
        .layers
        .get(idx)
        .ok_or_else(|| ModelError::Contract(format!("no frozen layer {idx}")))?;
    if layer.w1.shape()[0] != c {
        return Err(ModelError::Contract(format!(
            "frozen layer built for {} channels, input has {c}",
            layer.w1.shape()[0]
        )));
    }
    if cond_id >= image.num_conditions() {
        return Err(ModelError::Lookup(format!(
            "condition {cond_id} outside 0..{}",
            image.num_conditions()
        )));
    }
    if image.pos_features.shape()[0] != h * w {
        return Err(ModelError::Contract(format!(
            "spatial features built for {} positions, input has {}",
            image.pos_features.shape()[0],
            h * w
        )));
    }
    let hidden = layer.b1.shape()[0];
    let positions = b * n * h * w;

    // per-pixel channel vectors, position-major: [b, N, h, w, c] flattened
    let flat = v.permute(&[0, 2, 3, 4, 1])?.reshape(&[positions, c])?;
    let mut pre = flat.matmul(&layer.w1)?;

    // grid features repeat with period h·w along the position axis, so a
    // trailing-shape broadcast over [b·N, h·w, hidden] lines them up
    let pos_proj = image.pos_features.matmul(&layer.wp)?;
    pre = pre
        .reshape(&[b * n, h * w, hidden])?
        .add(&pos_proj)?
        .reshape(&[positions, hidden])?;

    let t_proj = time_embedding(t, TIME_EMBED_DIM)
        .reshape(&[1, TIME_EMBED_DIM])?
        .matmul(&layer.wt)?
        .reshape(&[hidden])?;
    let cond_proj = image
        .cond_table
        .slice(0, cond_id, 1)?
        .matmul(&layer.wc)?
        .reshape(&[hidden])?;
    pre = pre.add(&t_proj)?.add(&cond_proj)?.add(&layer.b1)?;

    let update = bent_identity(&pre)?.matmul(&layer.w2)?.add(&layer.b2)?;
    let out = flat.add(&update)?;
    Ok(out.reshape(&[b, n, h, w, c])?.permute(&[0, 4, 1, 2, 3])?)
}

/// Full noise prediction: L frozen layers alternating with L motion blocks.
/// Output shape equals input shape. Gradients reach only the motion blocks;
/// the frozen stand-in stays untouched.
pub fn denoiser_forward(
    z_t: &Tensor,
    t: usize,
    cond_id: usize,
    image: &ImageLayerParams,
    motion: &MotionModuleParams,
    enable_versatile: bool,
    enable_sparse_causal: bool,
) -> Result<Tensor> {
    if t < 1 {
        return Err(ModelError::Contract("timesteps are 1-based".into()));
    }
    if image.layers.len() != motion.blocks.len() {
        return Err(ModelError::Contract(format!(
            "{} frozen layers vs {} motion blocks",
            image.layers.len(),
            motion.blocks.len()
        )));
    }
    let mut x = z_t.clone();
    for idx in 0..image.layers.len() {
        x = frozen_layer_forward(&x, image, idx, t, cond_id)?;
        x = motion_block_forward(&x, &motion.blocks[idx], enable_versatile, enable_sparse_causal)?;
    }
    Ok(x)
}
