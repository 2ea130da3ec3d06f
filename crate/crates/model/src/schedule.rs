//! Noise schedules, the closed-form forward process, the noise-prediction
//! loss, and the deterministic reverse sampler.

use latentmotion_tensor::{no_grad, Tensor};

use crate::error::{ModelError, Result};

/// Variance schedule over timesteps 1..=T with cached cumulative products.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// Linear interpolation of β between the endpoints, inclusive.
    pub fn linear(t_max: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
        if t_max < 1 {
            return Err(ModelError::Config("schedule needs T ≥ 1".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(ModelError::Config(format!(
                "beta endpoints must satisfy 0 < start ≤ end < 1, got ({beta_start}, {beta_end})"
            )));
        }
        let beta: Vec<f64> = (0..t_max)
            .map(|i| {
                if t_max == 1 || i == 0 {
                    beta_start
                } else if i == t_max - 1 {
                    beta_end // pinned: float interpolation need not land exactly
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (t_max - 1) as f64
                }
            })
            .collect();
        Self::from_betas(&beta)
    }

    /// Schedule from explicit β values in [0, 1). The relaxed lower bound
    /// admits the all-zero edge schedule (ᾱ ≡ 1, noising is the identity).
    pub fn from_betas(beta: &[f64]) -> Result<NoiseSchedule> {
        if beta.is_empty() {
            return Err(ModelError::Config("schedule needs T ≥ 1".into()));
        }
        if beta.iter().any(|&b| !(0.0..1.0).contains(&b)) {
            return Err(ModelError::Config("every β must lie in [0, 1)".into()));
        }
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut prod = 1.0;
        for &a in &alpha {
            prod *= a;
            alpha_bar.push(prod);
        }
        Ok(NoiseSchedule { beta: beta.to_vec(), alpha, alpha_bar })
    }

    /// Step count T.
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires T ≥ 1
    }

    fn check_t(&self, t: usize, op: &str) -> Result<()> {
        if t < 1 || t > self.len() {
            return Err(ModelError::Contract(format!(
                "{op}: timestep {t} outside 1..={}",
                self.len()
            )));
        }
        Ok(())
    }

    /// β at 1-based timestep t.
    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    /// α = 1 − β at 1-based timestep t.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// Cumulative product ᾱ at 1-based timestep t, with ᾱ₀ defined as 1.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }
}

/// Closed-form noising: √ᾱ_t·z₀ + √(1−ᾱ_t)·ε.
pub fn forward_diffuse(z0: &Tensor, t: usize, eps: &Tensor, sched: &NoiseSchedule) -> Result<Tensor> {
    if z0.shape() != eps.shape() {
        return Err(ModelError::Contract(format!(
            "forward_diffuse: z0 shape {:?} vs eps shape {:?}",
            z0.shape(),
            eps.shape()
        )));
    }
    sched.check_t(t, "forward_diffuse")?;
    let ab = sched.alpha_bar(t);
    Ok(z0.scale(ab.sqrt()).add(&eps.scale((1.0 - ab).sqrt()))?)
}

/// Mean squared error between true and predicted noise, differentiable
/// through the prediction.
pub fn diffusion_loss(eps_true: &Tensor, eps_pred: &Tensor) -> Result<Tensor> {
    if eps_true.shape() != eps_pred.shape() {
        return Err(ModelError::Contract(format!(
            "diffusion_loss: shapes {:?} vs {:?}",
            eps_true.shape(),
            eps_pred.shape()
        )));
    }
    Ok(eps_pred.add(&eps_true.scale(-1.0))?.square().mean()?)
}

/// One deterministic reverse step from timestep `t` to `t_prev` (both ᾱ
/// indices; `t_prev = 0` means ᾱ = 1, i.e. the clean estimate):
/// z_prev = √ᾱ_prev · (z_t − √(1−ᾱ_t)·ε̂)/√ᾱ_t + √(1−ᾱ_prev)·ε̂.
pub fn ddim_step(
    z_t: &Tensor,
    eps_pred: &Tensor,
    t: usize,
    t_prev: usize,
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    if z_t.shape() != eps_pred.shape() {
        return Err(ModelError::Contract(format!(
            "ddim_step: z shape {:?} vs eps shape {:?}",
            z_t.shape(),
            eps_pred.shape()
        )));
    }
    if t <= t_prev {
        return Err(ModelError::Contract(format!(
            "ddim_step: need t > t_prev, got t={t}, t_prev={t_prev}"
        )));
    }
    sched.check_t(t, "ddim_step")?;
    let ab_t = sched.alpha_bar(t);
    let ab_prev = sched.alpha_bar(t_prev);
    let z0_coef = (ab_prev / ab_t).sqrt();
    let clean = z_t.add(&eps_pred.scale(-(1.0 - ab_t).sqrt()))?;
    Ok(clean.scale(z0_coef).add(&eps_pred.scale((1.0 - ab_prev).sqrt()))?)
}

/// The descending timestep ladder for subsampled reverse diffusion: `steps`
/// values at uniform stride T/steps starting from T (remainder dropped from
/// the low end), with a final 0 appended as the ᾱ₀ = 1 target.
pub fn ddim_timesteps(t_max: usize, steps: usize) -> Result<Vec<usize>> {
    if steps < 1 {
        return Err(ModelError::Config("ddim needs steps ≥ 1".into()));
    }
    if steps > t_max {
        return Err(ModelError::Config(format!(
            "ddim steps {steps} exceeds schedule length {t_max}"
        )));
    }
    let stride = t_max / steps;
    let mut ladder: Vec<usize> = (0..steps).map(|i| t_max - i * stride).collect();
    ladder.push(0);
    Ok(ladder)
}

/// Run the reverse process from `z_start` (the noise at timestep T) down the
/// subsampled ladder. `denoise` maps (z_t, t) to predicted noise. Recording
/// is disabled throughout; the result is fully determined by the inputs.
pub fn ddim_sample(
    mut denoise: impl FnMut(&Tensor, usize) -> Result<Tensor>,
    z_start: &Tensor,
    steps: usize,
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    let ladder = ddim_timesteps(sched.len(), steps)?;
    no_grad(|| {
        let mut z = z_start.clone();
        for pair in ladder.windows(2) {
            let (t, t_prev) = (pair[0], pair[1]);
            let eps = denoise(&z, t)?;
            z = ddim_step(&z, &eps, t, t_prev, sched)?;
        }
        Ok(z)
    })
}
