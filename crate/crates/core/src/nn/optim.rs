use alloc::vec::Vec;

use super::model::{Gradients, MlpModel};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

/// First and second moment buffers, one per parameter buffer of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.parameters().map(|p| alloc::vec![0.0; p.len()]).collect();
        Self { first: zeros.clone(), second: zeros, step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }
}

/// One AdamW update. Decoupled decay `θ ← θ(1 − lr·wd)` is applied first,
/// then the bias-corrected Adam step `θ ← θ − lr·m̂/(√v̂ + eps)`.
///
/// Non-finite gradients leave the model and state untouched.
pub fn adamw_step(
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut OptimizerState,
    lr: f64,
    config: &AdamWConfig,
) -> Result<(), NnError> {
    if !grads.is_finite() {
        return Err(NnError::NonFinite("gradients"));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - libm::pow(config.beta1, t as f64);
    let bc2 = 1.0 - libm::pow(config.beta2, t as f64);
    let decay = 1.0 - lr * config.weight_decay;
    let (b1, b2) = (config.beta1, config.beta2);
    for (((params, g), m), v) in model
        .parameters_mut()
        .zip(grads.slices())
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        debug_assert_eq!(params.len(), g.len());
        for (((p, &g), m), v) in params.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p * decay - lr * m_hat / (libm::sqrt(v_hat) + config.eps);
        }
    }
    Ok(())
}
