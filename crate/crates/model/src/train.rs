//! The training loop: denoising loss plus the inter-frame contrastive loss,
//! optimizing only the motion blocks and the noise adapter.
//!
//! Determinism contract: step `s` (1-based, absolute) derives its own RNG from
//! the run seed, so a resumed run replays the exact draws of an uninterrupted
//! one. The dataset is generated once from a salted copy of the same seed.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use latentmotion_tensor::Tensor;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::TrainConfig;
use crate::contrast::{adapt, combined_loss, contrastive_loss, ContrastiveConfig};
use crate::denoiser::denoiser_forward;
use crate::error::{ModelError, Result};
use crate::optim::Adam;
use crate::params::ModelParams;
use crate::schedule::{diffusion_loss, forward_diffuse, NoiseSchedule};
use crate::synthetic::{gen_synthetic_dataset, SyntheticSample};

/// Golden-ratio stride keeps per-step seeds distinct for any run seed.
const STEP_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
/// Keeps dataset generation independent of the per-step draws.
const DATASET_SEED_SALT: u64 = 0x5bd1_e995_38b3_4327;

/// Where a finished run left its artifacts.
#[derive(Debug)]
pub struct TrainReport {
    pub final_step: u64,
    pub loss_csv: PathBuf,
    pub final_checkpoint: PathBuf,
}

/// One optimization step on one sample: returns `(l_diff, l_con, l_total)`.
///
/// Draw order is part of the format: first the timestep, then per-frame noise,
/// frame-major. Any non-finite loss aborts with a numeric error rather than
/// writing poisoned values into the log.
pub fn train_step(
    sample: &SyntheticSample,
    params: &ModelParams,
    sched: &NoiseSchedule,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    adam: &mut Adam,
) -> Result<(f64, f64, f64)> {
    let (c, n, h, w) = (cfg.channels, cfg.frames, cfg.height, cfg.width);
    let t = rng.random_range(1..=sched.len());

    let mut noise = vec![0.0; c * n * h * w];
    for frame in 0..n {
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    noise[((ch * n + frame) * h + y) * w + x] = StandardNormal.sample(rng);
                }
            }
        }
    }
    let eps = Tensor::from_vec(noise, &[1, c, n, h, w])?;

    let z_t = forward_diffuse(&sample.video, t, &eps, sched)?;
    let eps_hat = denoiser_forward(
        &z_t,
        t,
        sample.cond_id,
        &params.image,
        &params.motion,
        cfg.enable_versatile,
        cfg.enable_sparse_causal,
    )?;
    let l_diff = diffusion_loss(&eps, &eps_hat)?;
    // Catch a diverged forward pass here, before the adapter path runs ops
    // that reject non-finite intermediates with a generic tensor error.
    if !l_diff.item().is_finite() {
        return Err(ModelError::Numeric(format!(
            "non-finite diffusion loss at timestep {t}: l_diff={}",
            l_diff.item()
        )));
    }

    let mut embeddings = Vec::with_capacity(n);
    for frame in 0..n {
        let frame_noise = eps_hat.slice(2, frame, 1)?.reshape(&[c, h, w])?;
        embeddings.push(adapt(&frame_noise, &params.adapter)?);
    }
    let ccfg = ContrastiveConfig::new(cfg.tau, cfg.negative_threshold, cfg.frames)?;
    let l_con = contrastive_loss(&embeddings, &ccfg)?;
    let l_total = combined_loss(&l_diff, &l_con, cfg.lambda_diff, cfg.lambda_con)?;

    let (vd, vc, vt) = (l_diff.item(), l_con.item(), l_total.item());
    if !vt.is_finite() {
        return Err(ModelError::Numeric(format!(
            "non-finite loss at timestep {t}: l_diff={vd}, l_con={vc}"
        )));
    }

    let trainables = params.trainable();
    for p in &trainables {
        p.zero_grad();
    }
    l_total.backward()?;
    adam.step(&trainables)?;
    Ok((vd, vc, vt))
}

/// Resume accepts changes to run-control fields (total steps, checkpoint
/// cadence, directories) but nothing that would alter the model or the data.
fn check_resume_compatible(stored: &TrainConfig, current: &TrainConfig) -> Result<()> {
    let mut normalized = stored.clone();
    normalized.steps = current.steps;
    normalized.checkpoint_every = current.checkpoint_every;
    normalized.checkpoint_dir = current.checkpoint_dir.clone();
    normalized.output_dir = current.output_dir.clone();
    if &normalized != current {
        return Err(ModelError::Checkpoint(
            "resume config changes model, data, or optimizer settings; \
             only steps, checkpoint cadence, and directories may differ"
                .into(),
        ));
    }
    Ok(())
}

/// Run (or resume) training to `cfg.steps` total steps. Appends one CSV row
/// per step to `<output_dir>/loss.csv` and writes a checkpoint every
/// `checkpoint_every` steps plus a `final` checkpoint at the end.
pub fn train(cfg: &TrainConfig, resume: Option<&Path>) -> Result<TrainReport> {
    cfg.validate()?;
    let (params, mut adam, start_step) = match resume {
        Some(dir) => {
            let ckpt = load_checkpoint(dir)?;
            check_resume_compatible(&ckpt.config, cfg)?;
            let mut adam = Adam::new(&ckpt.params.trainable(), cfg.learning_rate);
            if let Some(state) = ckpt.adam {
                adam.restore(state.t, &state.moments)?;
            }
            (ckpt.params, adam, ckpt.step)
        }
        None => {
            let params = ModelParams::init(cfg)?;
            let adam = Adam::new(&params.trainable(), cfg.learning_rate);
            (params, adam, 0)
        }
    };

    let sched = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)?;
    let dataset = gen_synthetic_dataset(cfg.dataset_size, cfg, cfg.seed ^ DATASET_SEED_SALT)?;

    fs::create_dir_all(&cfg.output_dir)?;
    let loss_csv = Path::new(&cfg.output_dir).join("loss.csv");
    let mut csv = if start_step > 0 && loss_csv.exists() {
        OpenOptions::new().append(true).open(&loss_csv)?
    } else {
        let mut f = File::create(&loss_csv)?;
        writeln!(f, "step,l_diff,l_con,l_total")?;
        f
    };

    let ckpt_root = Path::new(&cfg.checkpoint_dir);
    let total = cfg.steps as u64;
    for step in (start_step + 1)..=total {
        let idx = ((step - 1) % dataset.len() as u64) as usize;
        let mut rng =
            ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(step.wrapping_mul(STEP_SEED_STRIDE)));
        let (l_diff, l_con, l_total) =
            train_step(&dataset[idx], &params, &sched, cfg, &mut rng, &mut adam).map_err(
                |e| match e {
                    ModelError::Numeric(msg) => ModelError::Numeric(format!("step {step}: {msg}")),
                    other => other,
                },
            )?;
        writeln!(csv, "{step},{l_diff},{l_con},{l_total}")?;
        if cfg.checkpoint_every > 0 && step % cfg.checkpoint_every as u64 == 0 {
            let dir = ckpt_root.join(format!("step_{step:06}"));
            save_checkpoint(&dir, cfg, &params, Some(&adam), step)?;
        }
    }
    csv.flush()?;

    let final_step = total.max(start_step);
    let final_checkpoint = ckpt_root.join("final");
    save_checkpoint(&final_checkpoint, cfg, &params, Some(&adam), final_step)?;
    Ok(TrainReport { final_step, loss_csv, final_checkpoint })
}
