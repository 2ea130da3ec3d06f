//! Temporal transformer blocks: frame-axis attention under binary masks,
//! the fold/unfold between video tensors and per-position frame sequences,
//! and the residual motion block.

use latentmotion_tensor::Tensor;

use crate::error::{ModelError, Result};

/// Square binary attention mask over frame indices.
#[derive(Clone)]
pub struct AttentionMask {
    m: Tensor, // [n, n], entries in {0, 1}
    n: usize,
}

impl AttentionMask {
    /// All-ones mask: every frame attends to every frame.
    pub fn versatile(n: usize) -> Result<AttentionMask> {
        if n < 1 {
            return Err(ModelError::Contract("mask needs n ≥ 1".into()));
        }
        Ok(AttentionMask { m: Tensor::ones(&[n, n]), n })
    }

    /// Previous-frame mask: row i has its single 1 at column i−1. The first
    /// frame has no predecessor and attends to itself instead, so every row
    /// keeps at least one admissible key.
    pub fn sparse_causal(n: usize) -> Result<AttentionMask> {
        if n < 1 {
            return Err(ModelError::Contract("mask needs n ≥ 1".into()));
        }
        let mut data = vec![0.0; n * n];
        data[0] = 1.0;
        for i in 1..n {
            data[i * n + (i - 1)] = 1.0;
        }
        Ok(AttentionMask { m: Tensor::from_vec(data, &[n, n])?, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tensor(&self) -> &Tensor {
        &self.m
    }
}

/// One attention sub-layer's weights. The per-head query/key/value
/// projections live as column blocks of combined [inner, inner] matrices
/// (head h owns columns h·d..(h+1)·d, d = inner/heads); `wo` mixes the
/// re-concatenated heads back to inner_dim.
#[derive(Clone)]
pub struct AttentionParams {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub wo: Tensor,
    pub heads: usize,
}

impl AttentionParams {
    fn validate(&self, inner: usize) -> Result<()> {
        for (name, t) in [("wq", &self.wq), ("wk", &self.wk), ("wv", &self.wv), ("wo", &self.wo)] {
            if t.shape() != vec![inner, inner] {
                return Err(ModelError::Contract(format!(
                    "attention weight {name} must be [{inner}, {inner}], got {:?}",
                    t.shape()
                )));
            }
        }
        if self.heads < 1 || !inner.is_multiple_of(self.heads) {
            return Err(ModelError::Contract(format!(
                "heads {} must divide inner_dim {inner}",
                self.heads
            )));
        }
        Ok(())
    }
}

/// Weights of one motion block: channel↔inner projections plus the two
/// attention sub-layers.
#[derive(Clone)]
pub struct MotionBlockParams {
    pub proj_in: Tensor,  // [channels, inner]
    pub proj_out: Tensor, // [inner, channels]
    pub versatile: AttentionParams,
    pub sparse_causal: AttentionParams,
}

/// All trainable motion weights: one block per frozen layer.
#[derive(Clone)]
pub struct MotionModuleParams {
    pub blocks: Vec<MotionBlockParams>,
}

// ── fold / unfold ────────────────────────────────────────────────────

/// Fold spatial positions into the batch and project channels to inner_dim:
/// [b, c, N, h, w] → [(b·h·w), N, inner].
pub fn project_in(v: &Tensor, proj_in: &Tensor) -> Result<Tensor> {
    let shape = v.shape();
    if shape.len() != 5 {
        return Err(ModelError::Contract(format!(
            "project_in expects [b, c, frames, h, w], got {:?}",
            shape
        )));
    }
    let (b, c, n, h, w) = (shape[0], shape[1], shape[2], shape[3], shape[4]);
    let ps = proj_in.shape();
    if ps.len() != 2 || ps[0] != c {
        return Err(ModelError::Contract(format!(
            "proj_in must be [{c}, inner], got {ps:?}"
        )));
    }
    let inner = ps[1];
    let seq = v
        .permute(&[0, 3, 4, 2, 1])? // [b, h, w, N, c]
        .reshape(&[b * h * w * n, c])?
        .matmul(proj_in)?;
    Ok(seq.reshape(&[b * h * w, n, inner])?)
}

/// Inverse arrangement of [`project_in`]: [(b·h·w), N, inner] → [b, c, N, h, w].
pub fn project_out(x: &Tensor, proj_out: &Tensor, b: usize, h: usize, w: usize) -> Result<Tensor> {
    let shape = x.shape();
    if shape.len() != 3 || shape[0] != b * h * w {
        return Err(ModelError::Contract(format!(
            "project_out expects [(b·h·w), N, inner] with b·h·w = {}, got {:?}",
            b * h * w,
            shape
        )));
    }
    let (n, inner) = (shape[1], shape[2]);
    let ps = proj_out.shape();
    if ps.len() != 2 || ps[0] != inner {
        return Err(ModelError::Contract(format!(
            "proj_out must be [{inner}, channels], got {ps:?}"
        )));
    }
    let c = ps[1];
    let v = x
        .reshape(&[b * h * w * n, inner])?
        .matmul(proj_out)?
        .reshape(&[b, h, w, n, c])?
        .permute(&[0, 4, 3, 1, 2])?; // [b, c, N, h, w]
    Ok(v)
}

// ── attention ────────────────────────────────────────────────────────

/// Multi-head attention over the frame axis with a binary mask:
/// per head, scores = QKᵀ/√d with masked positions forced to a large
/// negative sentinel before the softmax.
pub fn masked_attention(z: &Tensor, mask: &AttentionMask, params: &AttentionParams) -> Result<Tensor> {
    attention_inner(z, Some(mask), params)
}

/// The same computation with no masking step at all (reference path for
/// equivalence checks against the all-ones mask).
pub fn unmasked_attention(z: &Tensor, params: &AttentionParams) -> Result<Tensor> {
    attention_inner(z, None, params)
}

fn attention_inner(
    z: &Tensor,
    mask: Option<&AttentionMask>,
    params: &AttentionParams,
) -> Result<Tensor> {
    let shape = z.shape();
    if shape.len() != 3 {
        return Err(ModelError::Contract(format!(
            "attention expects [batch, frames, inner], got {:?}",
            shape
        )));
    }
    let (bp, n, inner) = (shape[0], shape[1], shape[2]);
    params.validate(inner)?;
    if let Some(m) = mask {
        if m.n() != n {
            return Err(ModelError::Contract(format!(
                "mask is {}x{} but sequence has {n} frames",
                m.n(),
                m.n()
            )));
        }
    }
    let heads = params.heads;
    let d = inner / heads;
    let scale = 1.0 / (d as f64).sqrt();
    let flat = z.reshape(&[bp * n, inner])?;

    // project all positions at once per head, then attend per batch entry
    let mut per_head: Vec<Vec<Tensor>> = Vec::with_capacity(heads);
    for hd in 0..heads {
        let wq = params.wq.slice(1, hd * d, d)?;
        let wk = params.wk.slice(1, hd * d, d)?;
        let wv = params.wv.slice(1, hd * d, d)?;
        let q = flat.matmul(&wq)?;
        let k = flat.matmul(&wk)?;
        let v = flat.matmul(&wv)?;
        let mut outs = Vec::with_capacity(bp);
        for b in 0..bp {
            let qb = q.slice(0, b * n, n)?;
            let kb = k.slice(0, b * n, n)?;
            let vb = v.slice(0, b * n, n)?;
            let mut scores = qb.matmul(&kb.permute(&[1, 0])?)?.scale(scale);
            if let Some(m) = mask {
                scores = scores.masked_neg_inf_fill(m.tensor())?;
            }
            if !scores.is_finite() {
                return Err(ModelError::Numeric("non-finite attention scores".into()));
            }
            let attn = scores.softmax_lastdim()?;
            outs.push(attn.matmul(&vb)?);
        }
        per_head.push(outs);
    }
    let mut rows = Vec::with_capacity(bp);
    for b in 0..bp {
        let head_outs: Vec<Tensor> = per_head.iter().map(|h| h[b].clone()).collect();
        rows.push(Tensor::concat(&head_outs, 1)?); // [n, inner]
    }
    let joined = Tensor::concat(&rows, 0)?; // [bp·n, inner]
    Ok(joined.matmul(&params.wo)?.reshape(&[bp, n, inner])?)
}

// ── motion block ─────────────────────────────────────────────────────

/// Fixed sinusoidal embedding of frame index, [n, dim]; added to the
/// projected sequence so the attention sub-layers can tell frame order.
pub fn temporal_position_encoding(n: usize, dim: usize) -> Tensor {
    let mut data = vec![0.0; n * dim];
    for pos in 0..n {
        for i in 0..dim {
            let freq = 10000f64.powf(-((i / 2 * 2) as f64) / dim as f64);
            let angle = pos as f64 * freq;
            data[pos * dim + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::from_vec(data, &[n, dim]).expect("static shape")
}

/// One residual motion block:
/// project_in → +position encoding → Versatile attention (residual) →
/// previous-frame attention (residual) → project_out → add to the input.
/// Either attention sub-layer can be switched off for ablations.
pub fn motion_block_forward(
    v: &Tensor,
    params: &MotionBlockParams,
    enable_versatile: bool,
    enable_sparse_causal: bool,
) -> Result<Tensor> {
    let shape = v.shape();
    if shape.len() != 5 {
        return Err(ModelError::Contract(format!(
            "motion block expects [b, c, frames, h, w], got {:?}",
            shape
        )));
    }
    let (b, n, h, w) = (shape[0], shape[2], shape[3], shape[4]);
    let inner = params.proj_in.shape()[1];

    let mut x = project_in(v, &params.proj_in)?;
    x = x.add(&temporal_position_encoding(n, inner))?;
    if enable_versatile {
        let mask = AttentionMask::versatile(n)?;
        x = x.add(&masked_attention(&x, &mask, &params.versatile)?)?;
    }
    if enable_sparse_causal {
        let mask = AttentionMask::sparse_causal(n)?;
        x = x.add(&masked_attention(&x, &mask, &params.sparse_causal)?)?;
    }
    let delta = project_out(&x, &params.proj_out, b, h, w)?;
    Ok(v.add(&delta)?)
}
