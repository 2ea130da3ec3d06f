//! Video diffusion model: DDPM/DDIM schedules, dual-mask temporal motion
//! blocks grafted onto a frozen per-frame backbone, an inter-frame contrastive
//! loss over predicted noise, and the seeded training/sampling pipelines.

mod checkpoint;
mod config;
mod contrast;
mod denoiser;
mod error;
mod motion;
mod optim;
mod params;
mod sample;
mod schedule;
mod synthetic;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, AdamState, Checkpoint};
pub use config::TrainConfig;
pub use contrast::{
    adapt, anchor_loss, combined_loss, contrastive_loss, cosine_sim, ContrastiveConfig,
    NoiseAdapterParams,
};
pub use denoiser::{
    bent_identity, denoiser_forward, frozen_layer_forward, spatial_position_features,
    time_embedding, FrozenLayer, ImageLayerParams, COND_EMBED_DIM, MIXER_HIDDEN,
    SPATIAL_FEATURES, TIME_EMBED_DIM,
};
pub use error::{ModelError, Result};
pub use motion::{
    masked_attention, motion_block_forward, project_in, project_out,
    temporal_position_encoding, unmasked_attention, AttentionMask, AttentionParams,
    MotionBlockParams, MotionModuleParams,
};
pub use optim::Adam;
pub use params::ModelParams;
pub use sample::{decode_video, eval_temporal_consistency, generate_clip, sample_video};
pub use schedule::{
    ddim_sample, ddim_step, ddim_timesteps, diffusion_loss, forward_diffuse, NoiseSchedule,
};
pub use synthetic::{
    condition_direction, frame_centroid, gen_synthetic_dataset, SyntheticSample,
};
pub use train::{train, train_step, TrainReport};
