//! Adam optimizer over a fixed, ordered set of parameter tensors.

use latentmotion_tensor::Tensor;

use crate::error::{ModelError, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// Adaptive-moment optimizer. Moment buffers are positional: `step` must
/// always receive the same tensors in the same order as `new`.
pub struct Adam {
    lr: f64,
    /// Update count (also the bias-correction exponent).
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &[Tensor], lr: f64) -> Adam {
        Adam {
            lr,
            t: 0,
            m: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.numel()]).collect(),
        }
    }

    /// One update from the gradients currently stored on `params`. A
    /// parameter with no gradient (or an all-zero one) is left unchanged.
    pub fn step(&mut self, params: &[Tensor]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(ModelError::Contract(format!(
                "optimizer built for {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for (idx, p) in params.iter().enumerate() {
            let Some(grad) = p.grad() else { continue };
            if grad.len() != self.m[idx].len() {
                return Err(ModelError::Contract(format!(
                    "parameter {idx} changed size under the optimizer"
                )));
            }
            let mut data = p.data();
            for i in 0..grad.len() {
                let g = grad[i];
                let m = BETA1 * self.m[idx][i] + (1.0 - BETA1) * g;
                let v = BETA2 * self.v[idx][i] + (1.0 - BETA2) * g * g;
                self.m[idx][i] = m;
                self.v[idx][i] = v;
                data[i] -= self.lr * (m / bc1) / ((v / bc2).sqrt() + EPS);
            }
            p.set_data(&data)?;
        }
        Ok(())
    }

    /// Moment buffers as tensors shaped like their parameters, for
    /// checkpointing: (first moment, second moment) per parameter.
    pub fn state(&self, params: &[Tensor]) -> Result<Vec<(Tensor, Tensor)>> {
        params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let shape = p.shape();
                Ok((
                    Tensor::from_vec(self.m[i].clone(), &shape)?,
                    Tensor::from_vec(self.v[i].clone(), &shape)?,
                ))
            })
            .collect()
    }

    /// Restore moment buffers saved by [`Adam::state`].
    pub fn restore(&mut self, t: u64, state: &[(Tensor, Tensor)]) -> Result<()> {
        if state.len() != self.m.len() {
            return Err(ModelError::Checkpoint(format!(
                "optimizer state holds {} parameters, expected {}",
                state.len(),
                self.m.len()
            )));
        }
        for (i, (m, v)) in state.iter().enumerate() {
            if m.numel() != self.m[i].len() || v.numel() != self.v[i].len() {
                return Err(ModelError::Checkpoint(format!(
                    "optimizer state {i} has the wrong size"
                )));
            }
            self.m[i] = m.data();
            self.v[i] = v.data();
        }
        self.t = t;
        Ok(())
    }
}
