//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use super::{LayerSpec, NetworkParams};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second-moment accumulators shaped like the parameters they update.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: NetworkParams,
    v: NetworkParams,
    step: u64,
    hyper: AdamHyper,
}

impl AdamState {
    pub fn new(specs: &[LayerSpec], hyper: AdamHyper) -> Self {
        AdamState {
            m: NetworkParams::zeros(specs),
            v: NetworkParams::zeros(specs),
            step: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update; increments the step counter.
    pub fn apply(&mut self, params: &mut NetworkParams, grads: &NetworkParams) {
        self.step += 1;
        let t = self.step as i32;
        let h = self.hyper;
        let m_hat_scale = 1.0 / (1.0 - h.beta1.powi(t));
        let v_hat_scale = 1.0 / (1.0 - h.beta2.powi(t));
        for ((p, m), (v, g)) in params
            .layers_mut()
            .iter_mut()
            .zip(self.m.layers_mut())
            .zip(self.v.layers_mut().iter_mut().zip(grads.layers()))
        {
            let (Some(p), Some(m), Some(v), Some(g)) =
                (p.as_mut(), m.as_mut(), v.as_mut(), g.as_ref())
            else {
                continue;
            };
            for (pd, md, vd, gd) in [
                (
                    p.weights.data_mut(),
                    m.weights.data_mut(),
                    v.weights.data_mut(),
                    g.weights.data(),
                ),
                (
                    p.biases.data_mut(),
                    m.biases.data_mut(),
                    v.biases.data_mut(),
                    g.biases.data(),
                ),
            ] {
                for i in 0..pd.len() {
                    md[i] = h.beta1 * md[i] + (1.0 - h.beta1) * gd[i];
                    vd[i] = h.beta2 * vd[i] + (1.0 - h.beta2) * gd[i] * gd[i];
                    let m_hat = md[i] * m_hat_scale;
                    let v_hat = vd[i] * v_hat_scale;
                    pd[i] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
                }
            }
        }
    }
}
