use alloc::vec;
use alloc::vec::Vec;

use super::ParamStore;
use crate::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update at step `t >= 1`.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig, t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::Config("adam step counter starts at 1".into()));
    }
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::shape("adam_step", &[n], &[grads.len(), state.m.len(), state.v.len()]));
    }
    let bc1 = 1.0 - libm::pow(cfg.beta1, t as f64);
    let bc2 = 1.0 - libm::pow(cfg.beta2, t as f64);
    for i in 0..n {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (libm::sqrt(vhat) + cfg.eps);
    }
    Ok(())
}

/// Adam over every parameter of a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    states: Vec<AdamState>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let states = store.iter().map(|(_, t)| AdamState::new(t.len())).collect();
        Adam { config, states, t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update using the accumulated gradients times `grad_scale`,
    /// then zeroes them. Parameters without a gradient see a zero gradient.
    pub fn step(&mut self, store: &mut ParamStore, grad_scale: f64) -> Result<()> {
        if self.states.len() != store.len() {
            return Err(Error::Config("optimizer state does not match parameter store".into()));
        }
        self.t += 1;
        let mut scratch = Vec::new();
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            let t = store.get_mut(id);
            scratch.clear();
            match t.grad() {
                Some(g) => scratch.extend(g.iter().map(|x| x * grad_scale)),
                None => scratch.resize(t.len(), 0.0),
            }
            adam_step(t.data_mut(), &scratch, &mut self.states[id.index()], &self.config, self.t)?;
            t.zero_grad();
        }
        Ok(())
    }
}
