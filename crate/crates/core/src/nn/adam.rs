use serde::{Deserialize, Serialize};

use super::{Gradients, ParamBlock};
use crate::{Error, Result};

/// First/second moment estimates, one vector per parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    #[serde(skip)]
    pub first_moment: Vec<Vec<f64>>,
    #[serde(skip)]
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(blocks: &[ParamBlock]) -> Self {
        let zeros: Vec<Vec<f64>> = blocks.iter().map(|b| vec![0.0; b.len()]).collect();
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, step: 0, first_moment: zeros.clone(), second_moment: zeros }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(blocks: &mut [ParamBlock], grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    if grads.0.len() != blocks.len() || state.first_moment.len() != blocks.len() {
        return Err(Error::Shape("gradient / optimizer state does not match parameters".into()));
    }
    for (b, g) in blocks.iter().zip(&grads.0) {
        if g.len() != b.len() {
            return Err(Error::Shape(format!("gradient for `{}` has {} entries, expected {}", b.name, g.len(), b.len())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(b.name.clone()));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (i, block) in blocks.iter_mut().enumerate() {
        let (m, v) = (&mut state.first_moment[i], &mut state.second_moment[i]);
        for (k, p) in block.values.iter_mut().enumerate() {
            let g = grads.0[i][k];
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
