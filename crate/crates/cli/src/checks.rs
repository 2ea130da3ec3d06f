//! Self-check suite: finite-difference gradient verification plus the mask
//! and schedule invariants, sized by whatever config is passed in. Each
//! check returns a human-readable detail string either way, so the binary
//! can print a pass/fail table.

use latentmotion_model::{
    adapt, combined_loss, contrastive_loss, ddim_timesteps, denoiser_forward, diffusion_loss,
    forward_diffuse, AttentionMask, AttentionParams, ContrastiveConfig, ModelParams,
    MotionBlockParams, NoiseSchedule, Result, TrainConfig,
};
use latentmotion_tensor::{finite_diff_check, Tensor, TensorError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Worst relative gradient error tolerated by the `grad.*` checks.
pub const GRAD_TOL: f64 = 1e-4;

/// Central-difference step used by all gradient checks.
const FD_EPS: f64 = 1e-5;

/// Outcome of one named check.
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Run every check against `cfg`. `inject_fault` deliberately corrupts the
/// motion-block gradient comparison — a fixture so the failure path (exit
/// code 5) stays testable.
pub fn run_all(cfg: &TrainConfig, inject_fault: bool) -> Vec<CheckReport> {
    let results: Vec<(&'static str, std::result::Result<String, String>)> = vec![
        ("mask.versatile_all_ones", check_versatile_mask(cfg)),
        ("mask.sparse_causal_rule", check_sparse_causal_mask(cfg)),
        ("schedule.alpha_bar_product", check_alpha_bar_product(cfg)),
        ("schedule.beta_endpoints", check_beta_endpoints(cfg)),
        ("sampler.ladder_monotone", check_ladder(cfg)),
        ("grad.motion_block", check_motion_block_grad(cfg, inject_fault)),
        ("grad.noise_adapter", check_adapter_grad(cfg)),
        ("grad.full_pipeline", check_pipeline_grad(cfg)),
    ];
    results
        .into_iter()
        .map(|(name, res)| match res {
            Ok(detail) => CheckReport { name, passed: true, detail },
            Err(detail) => CheckReport { name, passed: false, detail },
        })
        .collect()
}

// ── mask and schedule invariants ─────────────────────────────────────

fn check_versatile_mask(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let n = cfg.frames;
    let mask = AttentionMask::versatile(n).map_err(|e| e.to_string())?;
    if mask.tensor().data().iter().all(|&v| v == 1.0) {
        Ok(format!("all {n}×{n} entries are 1"))
    } else {
        Err(format!("versatile mask for n={n} has non-one entries"))
    }
}

fn check_sparse_causal_mask(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let n = cfg.frames;
    let mask = AttentionMask::sparse_causal(n).map_err(|e| e.to_string())?;
    let data = mask.tensor().data();
    for i in 0..n {
        for j in 0..n {
            let want = if i == 0 { j == 0 } else { j == i - 1 };
            let got = data[i * n + j];
            if got != if want { 1.0 } else { 0.0 } {
                return Err(format!("row {i} col {j}: got {got}"));
            }
        }
    }
    Ok(format!("first row attends to itself, rows 1..{n} to their predecessor"))
}

fn check_alpha_bar_product(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let sched = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)
        .map_err(|e| e.to_string())?;
    if sched.alpha_bar(0) != 1.0 {
        return Err(format!("alpha_bar(0) = {}, want 1", sched.alpha_bar(0)));
    }
    let mut prod = 1.0;
    let mut worst = 0.0f64;
    for t in 1..=sched.len() {
        prod *= 1.0 - sched.beta(t);
        worst = worst.max((sched.alpha_bar(t) - prod).abs());
        if sched.alpha_bar(t) >= sched.alpha_bar(t - 1) {
            return Err(format!("alpha_bar not strictly decreasing at t={t}"));
        }
    }
    if worst < 1e-12 {
        Ok(format!("cumulative product agrees, worst diff {worst:.1e}"))
    } else {
        Err(format!("cumulative product off by {worst:.1e} (tol 1e-12)"))
    }
}

fn check_beta_endpoints(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let sched = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)
        .map_err(|e| e.to_string())?;
    let (first, last) = (sched.beta(1), sched.beta(sched.len()));
    if first == cfg.beta_start && last == cfg.beta_end {
        Ok(format!("β₁ = {first}, β_T = {last}, both exact"))
    } else {
        Err(format!("endpoints ({first}, {last}) ≠ ({}, {})", cfg.beta_start, cfg.beta_end))
    }
}

fn check_ladder(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let t_max = cfg.diffusion_steps;
    let steps = t_max.min(25);
    let ladder = ddim_timesteps(t_max, steps).map_err(|e| e.to_string())?;
    if ladder.first() != Some(&t_max) || ladder.last() != Some(&0) {
        return Err(format!("ladder must run {t_max} → 0, got {ladder:?}"));
    }
    if !ladder.windows(2).all(|w| w[0] > w[1]) {
        return Err(format!("ladder not strictly decreasing: {ladder:?}"));
    }
    Ok(format!("{} rungs from {t_max} down to 0", ladder.len()))
}

// ── gradient checks ──────────────────────────────────────────────────

fn as_tensor_err(e: latentmotion_model::ModelError) -> TensorError {
    TensorError::Contract(e.to_string())
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> =
        (0..n).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect();
    Tensor::from_vec(data, shape).expect("shape matches data length")
}

fn rand_attention(rng: &mut ChaCha8Rng, inner: usize, heads: usize) -> AttentionParams {
    let scale = 1.0 / (inner as f64).sqrt();
    AttentionParams {
        wq: rand_tensor(rng, &[inner, inner], scale).with_requires_grad(),
        wk: rand_tensor(rng, &[inner, inner], scale).with_requires_grad(),
        wv: rand_tensor(rng, &[inner, inner], scale).with_requires_grad(),
        wo: rand_tensor(rng, &[inner, inner], scale).with_requires_grad(),
        heads,
    }
}

fn grad_verdict(name: &str, err: f64) -> std::result::Result<String, String> {
    if err < GRAD_TOL {
        Ok(format!("max relative error {err:.2e} (tol {GRAD_TOL:.0e})"))
    } else {
        Err(format!("{name}: max relative error {err:.2e} exceeds tol {GRAD_TOL:.0e}"))
    }
}

fn check_motion_block_grad(
    cfg: &TrainConfig,
    inject_fault: bool,
) -> std::result::Result<String, String> {
    let mut err = motion_block_grad_error(cfg).map_err(|e| e.to_string())?;
    if inject_fault {
        // Test fixture: pretend the comparison came out wildly wrong so the
        // failure path through the table and exit code stays exercised.
        err += 1.0;
    }
    grad_verdict("motion block", err)
}

/// Finite-difference error for one motion block at the config's dimensions.
pub fn motion_block_grad_error(cfg: &TrainConfig) -> Result<f64> {
    let (c, n, h, w) = (cfg.channels, cfg.frames, cfg.height, cfg.width);
    let inner = cfg.inner_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x6d61_736b));
    let block = MotionBlockParams {
        proj_in: rand_tensor(&mut rng, &[c, inner], 0.6).with_requires_grad(),
        proj_out: rand_tensor(&mut rng, &[inner, c], 0.6).with_requires_grad(),
        versatile: rand_attention(&mut rng, inner, cfg.heads),
        sparse_causal: rand_attention(&mut rng, inner, cfg.heads),
    };
    let v = rand_tensor(&mut rng, &[1, c, n, h, w], 0.8);
    let params = vec![
        block.proj_in.clone(),
        block.proj_out.clone(),
        block.versatile.wq.clone(),
        block.versatile.wk.clone(),
        block.versatile.wv.clone(),
        block.versatile.wo.clone(),
        block.sparse_causal.wq.clone(),
        block.sparse_causal.wk.clone(),
        block.sparse_causal.wv.clone(),
        block.sparse_causal.wo.clone(),
    ];
    let err = finite_diff_check(
        |_| {
            let out = latentmotion_model::motion_block_forward(&v, &block, true, true)
                .map_err(as_tensor_err)?;
            out.square().mean()
        },
        &params,
        FD_EPS,
    )?;
    Ok(err)
}

fn check_adapter_grad(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let err = adapter_grad_error(cfg).map_err(|e| e.to_string())?;
    grad_verdict("noise adapter", err)
}

/// Finite-difference error for the adapter → contrastive-loss path.
pub fn adapter_grad_error(cfg: &TrainConfig) -> Result<f64> {
    let params = ModelParams::init(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x6164_6170));
    let frame_numel = cfg.frame_numel();
    let frames: Vec<Tensor> =
        (0..cfg.frames).map(|_| rand_tensor(&mut rng, &[frame_numel], 0.9)).collect();
    let ccfg = ContrastiveConfig::new(cfg.tau, cfg.negative_threshold, cfg.frames)?;
    let trainables = vec![
        params.adapter.w1.clone(),
        params.adapter.b1.clone(),
        params.adapter.w2.clone(),
        params.adapter.b2.clone(),
    ];
    let err = finite_diff_check(
        |_| {
            let embeddings: Vec<Tensor> = frames
                .iter()
                .map(|f| adapt(f, &params.adapter))
                .collect::<Result<_>>()
                .map_err(as_tensor_err)?;
            contrastive_loss(&embeddings, &ccfg).map_err(as_tensor_err)
        },
        &trainables,
        FD_EPS,
    )?;
    Ok(err)
}

fn check_pipeline_grad(cfg: &TrainConfig) -> std::result::Result<String, String> {
    let err = pipeline_grad_error(cfg).map_err(|e| e.to_string())?;
    grad_verdict("full pipeline", err)
}

/// Finite-difference error through the whole training loss: denoiser forward
/// at a mid-schedule timestep, diffusion loss against the true noise, the
/// per-frame adapter embeddings, the contrastive loss, and their weighted
/// combination — over every trainable tensor.
pub fn pipeline_grad_error(cfg: &TrainConfig) -> Result<f64> {
    let params = ModelParams::init(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x7069_7065));
    // Output projections start at zero, which silences the motion path; give
    // them small nonzero values so its gradients are actually exercised.
    for (name, tensor, _) in params.named_tensors() {
        if name.ends_with("proj_out") {
            let fresh = rand_tensor(&mut rng, &tensor.shape(), 0.1);
            tensor.set_data(&fresh.data())?;
        }
    }
    let (c, n, h, w) = (cfg.channels, cfg.frames, cfg.height, cfg.width);
    let z0 = rand_tensor(&mut rng, &[1, c, n, h, w], 1.0);
    let eps = rand_tensor(&mut rng, &[1, c, n, h, w], 1.0);
    let sched = NoiseSchedule::linear(cfg.diffusion_steps, cfg.beta_start, cfg.beta_end)?;
    let t = (cfg.diffusion_steps / 2).max(1);
    let z_t = forward_diffuse(&z0, t, &eps, &sched)?;
    let ccfg = ContrastiveConfig::new(cfg.tau, cfg.negative_threshold, cfg.frames)?;
    let trainables = params.trainable();
    let err = finite_diff_check(
        |_| {
            let eps_hat = denoiser_forward(
                &z_t,
                t,
                0,
                &params.image,
                &params.motion,
                cfg.enable_versatile,
                cfg.enable_sparse_causal,
            )
            .map_err(as_tensor_err)?;
            let l_diff = diffusion_loss(&eps, &eps_hat).map_err(as_tensor_err)?;
            let embeddings: Vec<Tensor> = (0..n)
                .map(|frame| {
                    let flat = eps_hat.slice(2, frame, 1)?.reshape(&[c, h, w])?;
                    adapt(&flat, &params.adapter).map_err(as_tensor_err)
                })
                .collect::<latentmotion_tensor::Result<_>>()?;
            let l_con = contrastive_loss(&embeddings, &ccfg).map_err(as_tensor_err)?;
            combined_loss(&l_diff, &l_con, cfg.lambda_diff, cfg.lambda_con).map_err(as_tensor_err)
        },
        &trainables,
        FD_EPS,
    )?;
    Ok(err)
}
