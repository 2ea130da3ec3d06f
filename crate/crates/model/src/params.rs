//! Parameter construction and the canonical named-tensor enumeration used by
//! the optimizer and checkpoints.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use latentmotion_tensor::Tensor;

use crate::config::TrainConfig;
use crate::contrast::NoiseAdapterParams;
use crate::denoiser::{
    spatial_position_features, FrozenLayer, ImageLayerParams, COND_EMBED_DIM, MIXER_HIDDEN,
    SPATIAL_FEATURES, TIME_EMBED_DIM,
};
use crate::error::Result;
use crate::motion::{AttentionParams, MotionBlockParams, MotionModuleParams};

/// Decouples parameter initialization from the per-step training draws.
const PARAM_SEED_SALT: u64 = 0x9d2c_5680_6c07_8965;

/// The complete parameter set: the frozen image stand-in plus the trainable
/// motion blocks and noise adapter.
#[derive(Clone)]
pub struct ModelParams {
    pub image: ImageLayerParams,
    pub motion: MotionModuleParams,
    pub adapter: NoiseAdapterParams,
}

fn randn(rng: &mut ChaCha8Rng, shape: &[usize], std: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            v * std
        })
        .collect();
    Tensor::from_vec(data, shape).expect("shape matches data")
}

impl ModelParams {
    /// Seeded initialization. Frozen tensors stay `requires_grad == false`;
    /// motion and adapter tensors are trainable. Every motion block's output
    /// projection starts at zero, so a fresh model's denoiser is exactly the
    /// frozen stack.
    pub fn init(cfg: &TrainConfig) -> Result<ModelParams> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ PARAM_SEED_SALT);
        let (c, inner) = (cfg.channels, cfg.inner_dim);

        let mut layers = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            layers.push(FrozenLayer {
                w1: randn(&mut rng, &[c, MIXER_HIDDEN], 0.7 / (c as f64).sqrt()),
                wp: randn(&mut rng, &[SPATIAL_FEATURES, MIXER_HIDDEN], 0.5),
                wt: randn(&mut rng, &[TIME_EMBED_DIM, MIXER_HIDDEN], 0.25),
                wc: randn(&mut rng, &[COND_EMBED_DIM, MIXER_HIDDEN], 0.25),
                b1: randn(&mut rng, &[MIXER_HIDDEN], 0.2),
                w2: randn(&mut rng, &[MIXER_HIDDEN, c], 0.7 / (MIXER_HIDDEN as f64).sqrt()),
                b2: randn(&mut rng, &[c], 0.05),
            });
        }
        let image = ImageLayerParams {
            layers,
            cond_table: randn(&mut rng, &[cfg.num_conditions, COND_EMBED_DIM], 1.0),
            pos_features: spatial_position_features(cfg.height, cfg.width),
        };

        let attn = |rng: &mut ChaCha8Rng| AttentionParams {
            wq: randn(rng, &[inner, inner], 1.0 / (inner as f64).sqrt()).with_requires_grad(),
            wk: randn(rng, &[inner, inner], 1.0 / (inner as f64).sqrt()).with_requires_grad(),
            wv: randn(rng, &[inner, inner], 1.0 / (inner as f64).sqrt()).with_requires_grad(),
            wo: randn(rng, &[inner, inner], 1.0 / (inner as f64).sqrt()).with_requires_grad(),
            heads: cfg.heads,
        };
        let mut blocks = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            blocks.push(MotionBlockParams {
                proj_in: randn(&mut rng, &[c, inner], 1.0 / (c as f64).sqrt()).with_requires_grad(),
                proj_out: Tensor::zeros(&[inner, c]).with_requires_grad(),
                versatile: attn(&mut rng),
                sparse_causal: attn(&mut rng),
            });
        }
        let motion = MotionModuleParams { blocks };

        let in_dim = cfg.frame_numel();
        let adapter = NoiseAdapterParams {
            w1: randn(&mut rng, &[in_dim, cfg.adapter_hidden], 1.0 / (in_dim as f64).sqrt())
                .with_requires_grad(),
            b1: Tensor::zeros(&[cfg.adapter_hidden]).with_requires_grad(),
            w2: randn(&mut rng, &[cfg.adapter_hidden, cfg.embed_dim], 1.0 / (cfg.adapter_hidden as f64).sqrt())
                .with_requires_grad(),
            b2: Tensor::zeros(&[cfg.embed_dim]).with_requires_grad(),
        };

        Ok(ModelParams { image, motion, adapter })
    }

    /// Canonical (name, tensor, frozen) listing. Order is stable and is the
    /// contract for both checkpoints and optimizer state.
    pub fn named_tensors(&self) -> Vec<(String, Tensor, bool)> {
        let mut out = Vec::new();
        for (i, l) in self.image.layers.iter().enumerate() {
            for (part, t) in [
                ("w1", &l.w1),
                ("wp", &l.wp),
                ("wt", &l.wt),
                ("wc", &l.wc),
                ("b1", &l.b1),
                ("w2", &l.w2),
                ("b2", &l.b2),
            ] {
                out.push((format!("image.{i}.{part}"), t.clone(), true));
            }
        }
        out.push(("image.cond_table".into(), self.image.cond_table.clone(), true));
        out.push(("image.pos_features".into(), self.image.pos_features.clone(), true));
        for (i, b) in self.motion.blocks.iter().enumerate() {
            out.push((format!("motion.{i}.proj_in"), b.proj_in.clone(), false));
            out.push((format!("motion.{i}.proj_out"), b.proj_out.clone(), false));
            for (sub, a) in [("versatile", &b.versatile), ("sparse_causal", &b.sparse_causal)] {
                for (part, t) in [("wq", &a.wq), ("wk", &a.wk), ("wv", &a.wv), ("wo", &a.wo)] {
                    out.push((format!("motion.{i}.{sub}.{part}"), t.clone(), false));
                }
            }
        }
        for (part, t) in [
            ("w1", &self.adapter.w1),
            ("b1", &self.adapter.b1),
            ("w2", &self.adapter.w2),
            ("b2", &self.adapter.b2),
        ] {
            out.push((format!("adapter.{part}"), t.clone(), false));
        }
        out
    }

    /// The trainable tensors, in the canonical order.
    pub fn trainable(&self) -> Vec<Tensor> {
        self.named_tensors()
            .into_iter()
            .filter(|(_, _, frozen)| !frozen)
            .map(|(_, t, _)| t)
            .collect()
    }
}
