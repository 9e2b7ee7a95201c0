use rayon::prelude::*;

use super::params::EncoderParams;
use crate::error::{Error, Result};

/// Forward-pass values kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedTrace {
    pub ids: Vec<u32>,
    pub pooled: Vec<f64>,
    pub norm: f64,
    /// Unit-norm output.
    pub output: Vec<f64>,
}

/// Dense gradient buffers shaped like [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: Vec<f64>,
    pub projection: Vec<f64>,
}

impl Gradients {
    pub fn zeros(params: &EncoderParams) -> Self {
        Gradients {
            embeddings: vec![0.0; params.embeddings.len()],
            projection: vec![0.0; params.projection.len()],
        }
    }

    pub fn clear(&mut self) {
        self.embeddings.fill(0.0);
        self.projection.fill(0.0);
    }
}

pub fn embed_forward(params: &EncoderParams, ids: &[u32]) -> Result<EmbedTrace> {
    if ids.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = params.dim();
    let mut pooled = vec![0.0; dim];
    for &id in ids {
        if id as usize >= params.vocab_size() {
            return Err(Error::IdOutOfRange { id, vocab_size: params.vocab_size() });
        }
        for (p, r) in pooled.iter_mut().zip(params.row(id)) {
            *p += r;
        }
    }
    let inv_n = 1.0 / ids.len() as f64;
    pooled.iter_mut().for_each(|p| *p *= inv_n);

    let mut z = vec![0.0; dim];
    for (i, zi) in z.iter_mut().enumerate() {
        let row = &params.projection[i * dim..(i + 1) * dim];
        *zi = row.iter().zip(&pooled).map(|(a, b)| a * b).sum();
    }
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > f64::MIN_POSITIVE) {
        return Err(Error::DegenerateEmbedding);
    }
    z.iter_mut().for_each(|v| *v /= norm);
    Ok(EmbedTrace {
        ids: ids.to_vec(),
        pooled,
        norm,
        output: z,
    })
}

/// Unit-norm embedding of a token id sequence.
pub fn embed_text(params: &EncoderParams, ids: &[u32]) -> Result<Vec<f64>> {
    embed_forward(params, ids).map(|t| t.output)
}

/// Embeds many sequences in parallel; results keep input order.
pub fn embed_batch(params: &EncoderParams, batch: &[Vec<u32>]) -> Vec<Result<Vec<f64>>> {
    batch.par_iter().map(|ids| embed_text(params, ids)).collect()
}

/// Accumulates into `grads` the gradient of a scalar loss given its gradient
/// with respect to the unit-norm output of `trace`.
pub fn embed_backward(
    params: &EncoderParams,
    trace: &EmbedTrace,
    grad_output: &[f64],
    grads: &mut Gradients,
) {
    let dim = params.dim();
    let u = &trace.output;
    let u_dot_g: f64 = u.iter().zip(grad_output).map(|(a, b)| a * b).sum();
    let dz: Vec<f64> = grad_output
        .iter()
        .zip(u)
        .map(|(g, ui)| (g - ui * u_dot_g) / trace.norm)
        .collect();

    let mut dh = vec![0.0; dim];
    for i in 0..dim {
        let p_row = &params.projection[i * dim..(i + 1) * dim];
        let g_row = &mut grads.projection[i * dim..(i + 1) * dim];
        for j in 0..dim {
            g_row[j] += dz[i] * trace.pooled[j];
            dh[j] += p_row[j] * dz[i];
        }
    }
    let inv_n = 1.0 / trace.ids.len() as f64;
    for &id in &trace.ids {
        let start = id as usize * dim;
        for (g, d) in grads.embeddings[start..start + dim].iter_mut().zip(&dh) {
            *g += d * inv_n;
        }
    }
}
