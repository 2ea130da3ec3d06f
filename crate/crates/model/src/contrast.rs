//! The noise adapter and the contrastive objective over per-frame predicted
//! noise: adjacent frames are pulled together, far-apart frames pushed away.

use latentmotion_tensor::Tensor;

use crate::denoiser::bent_identity;
use crate::error::{ModelError, Result};

/// Two-layer perceptron mapping flattened per-frame noise to an embedding.
#[derive(Clone)]
pub struct NoiseAdapterParams {
    pub w1: Tensor, // [c·h·w, hidden]
    pub b1: Tensor, // [hidden]
    pub w2: Tensor, // [hidden, embed_dim]
    pub b2: Tensor, // [embed_dim]
}

impl NoiseAdapterParams {
    pub fn embed_dim(&self) -> usize {
        self.w2.shape()[1]
    }
}

/// Contrastive hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct ContrastiveConfig {
    /// Temperature τ dividing every similarity.
    pub tau: f64,
    /// Frames k with |k − i| > m are the anchor i's negatives.
    pub m: usize,
    /// Frames per video.
    pub n: usize,
}

impl ContrastiveConfig {
    pub fn new(tau: f64, m: usize, n: usize) -> Result<ContrastiveConfig> {
        if tau.is_nan() || tau <= 0.0 {
            return Err(ModelError::Config(format!("tau must be > 0, got {tau}")));
        }
        if m < 1 || m >= n {
            return Err(ModelError::Config(format!(
                "need 1 ≤ m < frames, got m={m}, frames={n}"
            )));
        }
        Ok(ContrastiveConfig { tau, m, n })
    }

    /// 1-based negative frame indices for 1-based anchor i.
    pub fn negatives(&self, i: usize) -> Vec<usize> {
        (1..=self.n).filter(|&k| k.abs_diff(i) > self.m).collect()
    }
}

/// Embed one frame's predicted noise: flatten → affine → bent-identity →
/// affine. Differentiable through both the input and the weights.
pub fn adapt(eps_frame: &Tensor, params: &NoiseAdapterParams) -> Result<Tensor> {
    let numel = eps_frame.numel();
    let in_dim = params.w1.shape()[0];
    if numel != in_dim {
        return Err(ModelError::Contract(format!(
            "adapter expects {in_dim} inputs, frame has {numel}"
        )));
    }
    let h = eps_frame.reshape(&[1, in_dim])?.matmul(&params.w1)?.add(&params.b1)?;
    let out = bent_identity(&h)?.matmul(&params.w2)?.add(&params.b2)?;
    Ok(out.reshape(&[params.embed_dim()])?)
}

/// Plain cosine similarity of two equal-length vectors; either vector having
/// zero norm yields 0 (the orthogonal convention).
pub fn cosine_sim(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "cosine_sim: length mismatch");
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Scalar reference for one anchor's loss. `sims` is the similarity row
/// r^{(i,·)} over all N frames (index j−1 holds r^{(i,j)}); anchor `i` is
/// 1-based and must have a successor. Log-sum-exp stabilized.
pub fn anchor_loss(i: usize, sims: &[f64], cfg: &ContrastiveConfig) -> Result<f64> {
    if sims.len() != cfg.n {
        return Err(ModelError::Contract(format!(
            "similarity row has {} entries, expected {}",
            sims.len(),
            cfg.n
        )));
    }
    if i < 1 || i >= cfg.n {
        return Err(ModelError::Contract(format!(
            "anchor must lie in 1..{} (the last frame has no positive), got {i}",
            cfg.n
        )));
    }
    let pos = sims[i]; // r^{(i, i+1)}
    let negs: Vec<f64> = cfg.negatives(i).iter().map(|&k| sims[k - 1]).collect();
    if negs.is_empty() {
        return Ok(0.0);
    }
    let mut scaled: Vec<f64> = Vec::with_capacity(negs.len() + 1);
    scaled.push(pos / cfg.tau);
    scaled.extend(negs.iter().map(|s| s / cfg.tau));
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    Ok(lse - pos / cfg.tau)
}

/// Differentiable contrastive loss over the N per-frame embeddings: the mean
/// over anchors 1..N−1 of −log of the positive's softmax weight against the
/// anchor's negatives. Anchors with no negatives contribute 0.
pub fn contrastive_loss(embeddings: &[Tensor], cfg: &ContrastiveConfig) -> Result<Tensor> {
    if embeddings.len() != cfg.n {
        return Err(ModelError::Contract(format!(
            "{} embeddings for {} frames",
            embeddings.len(),
            cfg.n
        )));
    }
    if cfg.n < 2 {
        return Err(ModelError::Contract("contrastive loss needs ≥ 2 frames".into()));
    }
    let unit: Vec<Tensor> = embeddings
        .iter()
        .map(|e| e.cosine_normalize_lastdim())
        .collect::<latentmotion_tensor::Result<_>>()?;
    // r^{(i,j)} as a rank-0 graph node
    let sim = |a: &Tensor, b: &Tensor| -> Result<Tensor> { Ok(a.mul(b)?.sum()) };

    let mut total = Tensor::scalar(0.0);
    for i in 1..cfg.n {
        let negatives = cfg.negatives(i);
        if negatives.is_empty() {
            continue;
        }
        let pos = sim(&unit[i - 1], &unit[i])?.reshape(&[1])?;
        let mut logits = vec![pos];
        for k in negatives {
            logits.push(sim(&unit[i - 1], &unit[k - 1])?.reshape(&[1])?);
        }
        let stacked = Tensor::concat(&logits, 0)?.scale(1.0 / cfg.tau);
        let ratio = stacked.softmax_lastdim()?.slice(0, 0, 1)?.reshape(&[])?;
        total = total.add(&ratio.ln()?.scale(-1.0))?;
    }
    Ok(total.scale(1.0 / (cfg.n - 1) as f64))
}

/// Weighted sum of the two training losses.
pub fn combined_loss(
    l_diff: &Tensor,
    l_con: &Tensor,
    lambda_diff: f64,
    lambda_con: f64,
) -> Result<Tensor> {
    if lambda_diff < 0.0 || lambda_con < 0.0 {
        return Err(ModelError::Contract("loss weights must be ≥ 0".into()));
    }
    Ok(l_diff.scale(lambda_diff).add(&l_con.scale(lambda_con))?)
}
