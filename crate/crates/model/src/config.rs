//! Run configuration: hyperparameters plus output paths, JSON-serializable.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Everything a training or sampling run needs. Deserialization rejects
/// unknown keys; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Diffusion step count T.
    pub diffusion_steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Frames per video, N.
    pub frames: usize,
    /// Latent channels.
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Temporal-attention embedding width.
    pub inner_dim: usize,
    pub heads: usize,
    /// Motion blocks interleaved with frozen layers, L.
    pub layers: usize,
    /// Contrastive temperature τ.
    pub tau: f64,
    /// Frame-distance threshold m: frames with |k − i| > m act as negatives.
    pub negative_threshold: usize,
    pub lambda_diff: f64,
    pub lambda_con: f64,
    pub learning_rate: f64,
    /// Total training steps (a resumed run continues up to this count).
    pub steps: usize,
    pub seed: u64,
    /// Distinct motion-direction classes in the synthetic data.
    pub num_conditions: usize,
    /// Videos in the generated dataset (cycled during training).
    pub dataset_size: usize,
    /// Noise-adapter hidden width.
    pub adapter_hidden: usize,
    /// Noise-adapter output embedding length.
    pub embed_dim: usize,
    /// Ablation switches for the two attention sub-layers.
    pub enable_versatile: bool,
    pub enable_sparse_causal: bool,
    /// Periodic checkpoint interval in steps.
    pub checkpoint_every: usize,
    pub checkpoint_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            diffusion_steps: 1000,
            beta_start: 0.00085,
            beta_end: 0.012,
            frames: 8,
            channels: 2,
            height: 8,
            width: 8,
            inner_dim: 8,
            heads: 1,
            layers: 2,
            tau: 0.07,
            negative_threshold: 4,
            lambda_diff: 1.0,
            lambda_con: 0.07,
            learning_rate: 1e-3,
            steps: 1000,
            seed: 0,
            num_conditions: 4,
            dataset_size: 16,
            adapter_hidden: 32,
            embed_dim: 16,
            enable_versatile: true,
            enable_sparse_causal: true,
            checkpoint_every: 500,
            checkpoint_dir: PathBuf::from("checkpoints"),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if self.diffusion_steps < 1 {
            return bad("diffusion_steps must be ≥ 1".into());
        }
        if !(self.beta_start > 0.0 && self.beta_start <= self.beta_end && self.beta_end < 1.0) {
            return bad(format!(
                "beta endpoints must satisfy 0 < start ≤ end < 1, got ({}, {})",
                self.beta_start, self.beta_end
            ));
        }
        for (name, v) in [
            ("frames", self.frames),
            ("channels", self.channels),
            ("height", self.height),
            ("width", self.width),
            ("inner_dim", self.inner_dim),
            ("heads", self.heads),
            ("layers", self.layers),
            ("num_conditions", self.num_conditions),
            ("dataset_size", self.dataset_size),
            ("adapter_hidden", self.adapter_hidden),
            ("embed_dim", self.embed_dim),
            ("checkpoint_every", self.checkpoint_every),
        ] {
            if v < 1 {
                return bad(format!("{name} must be ≥ 1"));
            }
        }
        if !self.inner_dim.is_multiple_of(self.heads) {
            return bad(format!(
                "inner_dim {} must be divisible by heads {}",
                self.inner_dim, self.heads
            ));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return bad(format!("tau must be > 0, got {}", self.tau));
        }
        if self.negative_threshold < 1 || self.negative_threshold >= self.frames {
            return bad(format!(
                "negative_threshold must satisfy 1 ≤ m < frames, got m={} frames={}",
                self.negative_threshold, self.frames
            ));
        }
        if self.lambda_diff < 0.0 || self.lambda_con < 0.0 {
            return bad("loss weights must be ≥ 0".into());
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        Ok(())
    }

    /// Flattened per-frame latent size c·h·w (the adapter's input width).
    pub fn frame_numel(&self) -> usize {
        self.channels * self.height * self.width
    }
}
