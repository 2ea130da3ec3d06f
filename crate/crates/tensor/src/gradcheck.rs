//! Central finite-difference verification of the backward pass.

use crate::error::{Result, TensorError};
use crate::ops::no_grad;
use crate::tensor::Tensor;

/// Compare analytic gradients against central finite differences.
///
/// `f` must map `params` to a rank-0 loss and be deterministic. The analytic
/// gradient comes from one recorded forward/backward; each parameter element
/// is then perturbed by `±eps` with `f` re-evaluated under `no_grad`. Returns
/// the worst relative error `|analytic - numeric| / max(1, |numeric|)` over
/// all elements. `eps` must be strictly positive.
pub fn finite_diff_check<F>(f: F, params: &[Tensor], eps: f64) -> Result<f64>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(TensorError::Contract(format!(
            "finite_diff_check: eps must be > 0, got {eps}"
        )));
    }
    for (i, p) in params.iter().enumerate() {
        if !p.requires_grad() {
            return Err(TensorError::Contract(format!(
                "finite_diff_check: params[{i}] does not require grad"
            )));
        }
    }

    let loss = f(params)?;
    loss.backward()?;
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|p| p.grad().unwrap_or_else(|| vec![0.0; p.numel()]))
        .collect();

    let mut worst = 0.0f64;
    for (p, pg) in params.iter().zip(&analytic) {
        for (i, &analytic_g) in pg.iter().enumerate() {
            let orig = p.value_at(i);
            p.set_value_at(i, orig + eps);
            let up = no_grad(|| f(params))?.item();
            p.set_value_at(i, orig - eps);
            let down = no_grad(|| f(params))?.item();
            p.set_value_at(i, orig);
            let numeric = (up - down) / (2.0 * eps);
            let err = (analytic_g - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
