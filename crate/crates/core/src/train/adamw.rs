//! Adaptive moment optimizer with decoupled weight decay.

use crate::error::{Error, Result};
use crate::nnet::tensor::Matrix;
use crate::nnet::TransformerModel;
use crate::scalar::Scalar;

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay, applied only to parameter kinds that decay.
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First and second moment estimates for every model parameter, kept in
/// double precision regardless of the model's scalar type.
pub struct AdamW {
    cfg: AdamWConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new<T: Scalar>(cfg: AdamWConfig, model: &TransformerModel<T>) -> Result<Self> {
        if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                cfg.learning_rate
            )));
        }
        let shapes: Vec<usize> = model
            .params()
            .iter()
            .map(|(_, _, p)| p.data.len())
            .collect();
        Ok(AdamW {
            cfg,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    /// One update over every parameter, with the learning rate scaled by
    /// `lr_scale` (the warmup factor). Gradients come from a gradient
    /// accumulator shaped like the model.
    pub fn step<T: Scalar>(
        &mut self,
        model: &mut TransformerModel<T>,
        grads: &TransformerModel<T>,
        lr_scale: f64,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.cfg.beta1.powi(t);
        let bc2 = 1.0 - self.cfg.beta2.powi(t);
        let lr = self.cfg.learning_rate * lr_scale;
        let grad_mats: Vec<&Matrix<T>> = grads.params().into_iter().map(|(_, _, p)| p).collect();
        for (slot, (_, kind, param)) in model.params_mut().into_iter().enumerate() {
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            let g_mat = grad_mats[slot];
            debug_assert_eq!(param.data.len(), g_mat.data.len());
            let decay = if kind.decays() {
                self.cfg.weight_decay
            } else {
                0.0
            };
            for i in 0..param.data.len() {
                let g = g_mat.data[i].to_f64_lossy();
                m[i] = self.cfg.beta1 * m[i] + (1.0 - self.cfg.beta1) * g;
                v[i] = self.cfg.beta2 * v[i] + (1.0 - self.cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let p = param.data[i].to_f64_lossy();
                let next = p - lr * (m_hat / (v_hat.sqrt() + self.cfg.eps) + decay * p);
                param.data[i] = T::from_f64_lossy(next);
            }
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// Warmup factor for step `step` (0-based) out of `total_steps`: linear
/// ramp over the first tenth of training, then constant 1.
pub fn warmup_scale(step: usize, total_steps: usize) -> f64 {
    let warmup = (total_steps / 10).max(1);
    if step < warmup {
        (step + 1) as f64 / warmup as f64
    } else {
        1.0
    }
}
