//! Adam with bias correction, decoupled weight decay, and the cosine
//! learning-rate schedule.

use super::TrainError;
use crate::nn::{Scalar, Tensor};

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Apply weight decay to parameters directly (`theta -= lr * wd * theta`
    /// before the moment update) instead of adding it to gradients.
    pub decoupled_weight_decay: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-5,
            decoupled_weight_decay: true,
        }
    }
}

/// First/second moment estimates, one pair per parameter tensor.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    pub m: Vec<Tensor<F>>,
    pub v: Vec<Tensor<F>>,
    pub t: u64,
}

impl<F: Scalar> AdamState<F> {
    /// Fresh zero moments matching the given parameter tensors.
    pub fn new(params: &[&Tensor<F>]) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.rows, p.cols)).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.rows, p.cols)).collect(),
            t: 0,
        }
    }
}

/// One Adam step over all parameter tensors. `lrs` gives the learning rate
/// per tensor (pre-training uses one shared rate; fine-tuning scales the
/// encoder separately from the head).
pub fn adam_step<F: Scalar>(
    params: &mut [&mut Tensor<F>],
    grads: &[&Tensor<F>],
    state: &mut AdamState<F>,
    lrs: &[f64],
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != lrs.len() {
        return Err(TrainError::ShapeMismatch(format!(
            "adam: {} params, {} grads, {} moments, {} lrs",
            params.len(),
            grads.len(),
            state.m.len(),
            lrs.len()
        )));
    }
    state.t += 1;
    let t = state.t;
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    let beta1 = F::from_f64(cfg.beta1);
    let beta2 = F::from_f64(cfg.beta2);
    let one_m_beta1 = F::from_f64(1.0 - cfg.beta1);
    let one_m_beta2 = F::from_f64(1.0 - cfg.beta2);
    let eps = F::from_f64(cfg.eps);
    for (i, (param, grad)) in params.iter_mut().zip(grads.iter()).enumerate() {
        if param.rows != grad.rows || param.cols != grad.cols {
            return Err(TrainError::ShapeMismatch(format!(
                "adam tensor {i}: {}x{} vs grad {}x{}",
                param.rows, param.cols, grad.rows, grad.cols
            )));
        }
        let lr = F::from_f64(lrs[i]);
        let wd = F::from_f64(cfg.weight_decay);
        let inv_bc1 = F::from_f64(1.0 / bc1);
        let inv_bc2 = F::from_f64(1.0 / bc2);
        let m = &mut state.m[i].data;
        let v = &mut state.v[i].data;
        for j in 0..param.data.len() {
            let mut g = grad.data[j];
            if !g.is_finite() {
                return Err(TrainError::NonFiniteGrad {
                    tensor: i,
                    index: j,
                });
            }
            let theta = &mut param.data[j];
            if cfg.weight_decay != 0.0 {
                if cfg.decoupled_weight_decay {
                    *theta = *theta - lr * wd * *theta;
                } else {
                    g += wd * *theta;
                }
            }
            m[j] = beta1 * m[j] + one_m_beta1 * g;
            v[j] = beta2 * v[j] + one_m_beta2 * g * g;
            let m_hat = m[j] * inv_bc1;
            let v_hat = v[j] * inv_bc2;
            *theta = *theta - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Cosine decay without restarts: `lr0 * 0.5 * (1 + cos(pi t / total))`.
pub fn cosine_lr(step: u64, total: u64, lr0: f64) -> Result<f64, TrainError> {
    if total == 0 || step > total {
        return Err(TrainError::Domain(format!(
            "cosine_lr: step {step} outside 0..={total}"
        )));
    }
    Ok(lr0 * 0.5 * (1.0 + (std::f64::consts::PI * step as f64 / total as f64).cos()))
}
