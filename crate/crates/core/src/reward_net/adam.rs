use serde::{Deserialize, Serialize};

use super::{Gradients, RewardNetParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Added to the gradient as `weight_decay * param`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    /// Zero moments shaped like `shapes` (one entry per parameter tensor).
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn for_params(config: AdamConfig, params: &RewardNetParams) -> Self {
        let shapes: Vec<usize> = params.trainable().iter().map(|t| t.len()).collect();
        Self::new(config, &shapes)
    }
}

/// One bias-corrected Adam step over an arbitrary list of parameter tensors.
pub fn adam_update(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameter tensors, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor {i}: {} params, {} grads, {} moments",
                p.len(),
                g.len(),
                state.m[i].len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient tensor {i}")));
        }
    }
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate {lr}")));
    }
    let c = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        for k in 0..p.len() {
            let gk = g[k] + c.weight_decay * p[k];
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
            let mhat = m[k] / bc1;
            let vhat = v[k] / bc2;
            p[k] -= lr * mhat / (vhat.sqrt() + c.eps);
        }
    }
    Ok(())
}

/// Adam step on the network's trainable tensors; bumps the parameter generation.
pub fn adam_step(params: &mut RewardNetParams, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    let g: Vec<&[f64]> = grads.tensors.iter().map(|t| t.as_slice()).collect();
    let mut p = params.trainable_mut();
    adam_update(&mut p, &g, state, lr)?;
    params.generation += 1;
    Ok(())
}
