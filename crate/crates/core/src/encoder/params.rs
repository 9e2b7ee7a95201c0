use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Standard deviation for rows of newly injected tokens.
pub const INJECTED_INIT_STD: f64 = 0.2;
/// Standard deviation for every other embedding row.
pub const BASE_INIT_STD: f64 = 0.02;
/// Noise added to the identity projection.
pub const PROJECTION_NOISE_STD: f64 = 0.01;
pub const DEFAULT_DIM: usize = 64;

/// Trainable state of the bi-encoder: an embedding table, mean pooling and a
/// square projection followed by L2 normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    vocab_size: usize,
    dim: usize,
    /// Row-major `[vocab_size × dim]`.
    pub embeddings: Vec<f64>,
    /// Row-major `[dim × dim]`; the pooled vector `h` maps to `projection · h`.
    pub projection: Vec<f64>,
    injected_ids: BTreeSet<u32>,
}

impl EncoderParams {
    pub fn from_parts(
        vocab_size: usize,
        dim: usize,
        embeddings: Vec<f64>,
        projection: Vec<f64>,
        injected_ids: BTreeSet<u32>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be at least 1".into()));
        }
        if embeddings.len() != vocab_size * dim || projection.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "parameter blocks do not match vocab_size={vocab_size}, dim={dim}"
            )));
        }
        if let Some(&id) = injected_ids.iter().find(|&&id| id as usize >= vocab_size) {
            return Err(Error::IdOutOfRange { id, vocab_size });
        }
        if embeddings.iter().chain(&projection).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(EncoderParams {
            vocab_size,
            dim,
            embeddings,
            projection,
            injected_ids,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn injected_ids(&self) -> &BTreeSet<u32> {
        &self.injected_ids
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.embeddings[start..start + self.dim]
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        let start = id as usize * self.dim;
        &mut self.embeddings[start..start + self.dim]
    }

    pub fn parameter_count(&self) -> usize {
        self.embeddings.len() + self.projection.len()
    }
}

/// Seeded initialization. Injected rows are drawn from N(0, 0.2²), all other
/// rows from N(0, 0.02²); the projection is the identity plus N(0, 0.01²) noise.
pub fn init_encoder(
    vocab_size: usize,
    dim: usize,
    seed: u64,
    injected_ids: &BTreeSet<u32>,
) -> Result<EncoderParams> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    if let Some(&id) = injected_ids.iter().find(|&&id| id as usize >= vocab_size) {
        return Err(Error::IdOutOfRange { id, vocab_size });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let injected = Normal::new(0.0, INJECTED_INIT_STD).expect("valid std");
    let base = Normal::new(0.0, BASE_INIT_STD).expect("valid std");
    let noise = Normal::new(0.0, PROJECTION_NOISE_STD).expect("valid std");

    let mut embeddings = Vec::with_capacity(vocab_size * dim);
    for id in 0..vocab_size as u32 {
        let dist = if injected_ids.contains(&id) { &injected } else { &base };
        embeddings.extend((0..dim).map(|_| dist.sample(&mut rng)));
    }
    let mut projection = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let eye = if i == j { 1.0 } else { 0.0 };
            projection.push(eye + noise.sample(&mut rng));
        }
    }
    EncoderParams::from_parts(vocab_size, dim, embeddings, projection, injected_ids.clone())
}
