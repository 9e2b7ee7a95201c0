use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderParams, FreezeMask, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with per-row freezing: frozen parameters and their moments are never
/// touched.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m_emb: Vec<f64>,
    v_emb: Vec<f64>,
    m_proj: Vec<f64>,
    v_proj: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(params: &EncoderParams, config: AdamConfig) -> Self {
        Adam {
            config,
            m_emb: vec![0.0; params.embeddings.len()],
            v_emb: vec![0.0; params.embeddings.len()],
            m_proj: vec![0.0; params.projection.len()],
            v_proj: vec![0.0; params.projection.len()],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut EncoderParams, grads: &Gradients, mask: &FreezeMask, lr: f64) {
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };
        let dim = params.dim();
        for (row, &trainable) in mask.embedding_rows_trainable.iter().enumerate() {
            if !trainable {
                continue;
            }
            let r = row * dim..(row + 1) * dim;
            update(
                &mut params.embeddings[r.clone()],
                &grads.embeddings[r.clone()],
                &mut self.m_emb[r.clone()],
                &mut self.v_emb[r],
            );
        }
        if mask.projection_trainable {
            update(&mut params.projection, &grads.projection, &mut self.m_proj, &mut self.v_proj);
        }
    }
}
