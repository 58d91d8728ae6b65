//! RAdam with a step-decay learning-rate schedule.
//!
//! Rectified Adam: bias-corrected first moment always; the adaptive
//! second-moment denominator only once the variance estimate is tractable
//! (ρ_t > 5), otherwise the update falls back to plain momentum SGD.
//! Network and physical parameters are concatenated into one flat vector and
//! updated jointly.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Schedule {
    pub base_lr: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { base_lr: 1e-3, decay_factor: 0.9, decay_every: 1000 }
    }
}

impl Schedule {
    /// base_lr · factor^⌊epoch / every⌋
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.base_lr * self.decay_factor.powi((epoch / self.decay_every) as i32)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimState {
    pub step: usize,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub schedule: Schedule,
    /// Max gradient L2 norm; None disables clipping.
    pub grad_clip: Option<f64>,
}

impl OptimState {
    pub fn new(n_params: usize, schedule: Schedule) -> Self {
        OptimState {
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            schedule,
            grad_clip: None,
        }
    }

    pub fn current_lr(&self, epoch: usize) -> f64 {
        self.schedule.lr_at(epoch)
    }

    /// One RAdam update of `params` in place. `epoch` drives the lr schedule.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], epoch: usize) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Config(format!(
                "optimizer state length {} does not match parameters {} / gradients {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if !grads.iter().all(|g| g.is_finite()) {
            return Err(Error::Numerical("non-finite gradient passed to optimizer".into()));
        }

        let clip_scale = match self.grad_clip {
            Some(max_norm) => {
                let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max_norm {
                    max_norm / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };

        self.step += 1;
        let t = self.step as f64;
        let lr = self.schedule.lr_at(epoch);
        let (b1, b2) = (self.beta1, self.beta2);
        let b1t = b1.powf(t);
        let b2t = b2.powf(t);
        let rho_inf = 2.0 / (1.0 - b2) - 1.0;
        let rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
        let rect = if rho_t > 5.0 {
            Some(
                ((rho_t - 4.0) * (rho_t - 2.0) * rho_inf
                    / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                    .sqrt(),
            )
        } else {
            None
        };

        for i in 0..params.len() {
            let g = grads[i] * clip_scale;
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / (1.0 - b1t);
            match rect {
                Some(r) => {
                    let denom = (self.v[i] / (1.0 - b2t)).sqrt() + self.eps;
                    params[i] -= lr * r * m_hat / denom;
                }
                None => {
                    params[i] -= lr * m_hat;
                }
            }
        }
        Ok(())
    }
}
