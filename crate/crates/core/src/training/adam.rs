use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::loss::{check_finite, tensor_name};
use super::Gradients;
use crate::error::Result;
use crate::model::ModelParameters;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates mirroring the parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: [Array2<f64>; 4],
    second: [Array2<f64>; 4],
}

impl AdamState {
    pub fn new(params: &ModelParameters, config: AdamConfig) -> Self {
        let zeros = || params.tensors().map(|t| Array2::zeros(t.dim()));
        AdamState {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients abort before any
/// parameter is touched.
pub fn adam_step(params: &mut ModelParameters, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    for (k, g) in grads.tensors().into_iter().enumerate() {
        check_finite(tensor_name(k), g)?;
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
    }
    Ok(())
}
