//! Central finite differences over the 28 prediction components and the
//! two homoscedastic scalars. Verification only; never used for training.

use crate::error::{Error, Result};
use crate::losses::{loss, LossGradient, LossId, LossParams, PoseTarget, PredictionVector, PRED_DIM};

pub const GRAD_DIM: usize = PRED_DIM + 2;

pub const MIN_STEP: f64 = 1e-8;
pub const MAX_STEP: f64 = 1e-3;

pub fn finite_difference_gradient(
    id: LossId,
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &LossParams,
    step: f64,
) -> Result<[f64; GRAD_DIM]> {
    if !(MIN_STEP..=MAX_STEP).contains(&step) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {step:e} outside [{MIN_STEP:e}, {MAX_STEP:e}]"
        )));
    }
    let mut out = [0.0; GRAD_DIM];
    for k in 0..PRED_DIM {
        let mut plus = *pred;
        let mut minus = *pred;
        plus.0[k] += step;
        minus.0[k] -= step;
        out[k] = (loss(id, &plus, target, params)? - loss(id, &minus, target, params)?) / (2.0 * step);
    }
    for (k, slot) in out[PRED_DIM..].iter_mut().enumerate() {
        let mut plus = *params;
        let mut minus = *params;
        if k == 0 {
            plus.homo.s_x += step;
            minus.homo.s_x -= step;
        } else {
            plus.homo.s_q += step;
            minus.homo.s_q -= step;
        }
        *slot = (loss(id, pred, target, &plus)? - loss(id, pred, target, &minus)?) / (2.0 * step);
    }
    Ok(out)
}

/// `max_k |a_k - f_k| / max(1, |a_k|)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, f)| (a - f).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Relative error between `grad` and the finite-difference estimate.
pub fn check_gradient(
    id: LossId,
    pred: &PredictionVector,
    target: &PoseTarget,
    params: &LossParams,
    grad: &LossGradient,
    step: f64,
) -> Result<f64> {
    let numeric = finite_difference_gradient(id, pred, target, params, step)?;
    Ok(max_relative_error(&grad.to_vec(), &numeric))
}
