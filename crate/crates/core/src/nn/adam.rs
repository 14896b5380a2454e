use serde::{Deserialize, Serialize};

use super::NnError;

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    last_t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            last_t: 0,
        }
    }

    /// Last step index applied, 0 before the first step.
    pub fn t(&self) -> u64 {
        self.last_t
    }

    /// Applies update number `t` (1-based). `t` must exceed every earlier `t`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], t: u64) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::InvalidArgument(format!(
                "adam holds {} moments but got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if t <= self.last_t {
            return Err(NnError::InvalidArgument(format!(
                "adam step t={t} must be greater than the previous t={}",
                self.last_t
            )));
        }
        self.last_t = t;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(t as i32);
        let c2 = 1.0 - b2.powi(t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }

    /// Applies the next step in sequence.
    pub fn step_next(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        self.step(params, grads, self.last_t + 1)
    }
}
