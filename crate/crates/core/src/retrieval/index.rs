use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PassageStore;
use crate::encoder::{embed_text, EncoderParams};
use crate::error::{Error, Result};
use crate::tokenizer::WordPieceVocab;

/// A passage left out of the index, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedPassage {
    pub id: String,
    pub reason: String,
}

/// Unit-norm passage embeddings for exact search.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    ids: Vec<String>,
    vectors: Vec<f64>,
    dim: usize,
    excluded: Vec<ExcludedPassage>,
}

impl EmbeddingIndex {
    pub fn from_vectors(ids: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::InvalidArgument("id and vector counts differ".into()));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidArgument("vectors have different dimensions".into()));
        }
        Ok(EmbeddingIndex {
            ids,
            vectors: vectors.concat(),
            dim,
            excluded: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn excluded(&self) -> &[ExcludedPassage] {
        &self.excluded
    }
}

/// Embeds `title text` of every passage. Passages that tokenize to nothing
/// (or embed degenerately) are recorded in [`EmbeddingIndex::excluded`].
pub fn build_index(
    params: &EncoderParams,
    vocab: &WordPieceVocab,
    corpus: &PassageStore,
) -> Result<EmbeddingIndex> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let embedded: Vec<Result<Vec<f64>>> = corpus
        .passages()
        .par_iter()
        .map(|p| embed_text(params, &vocab.encode(&p.full_text())))
        .collect();
    let mut ids = Vec::with_capacity(corpus.len());
    let mut vectors = Vec::with_capacity(corpus.len() * params.dim());
    let mut excluded = Vec::new();
    for (p, e) in corpus.iter().zip(embedded) {
        match e {
            Ok(v) => {
                ids.push(p.id.clone());
                vectors.extend(v);
            }
            Err(Error::EmptyInput | Error::DegenerateEmbedding) => excluded.push(ExcludedPassage {
                id: p.id.clone(),
                reason: e.unwrap_err().to_string(),
            }),
            Err(other) => return Err(other),
        }
    }
    if ids.is_empty() {
        return Err(Error::InvalidArgument("no passage produced an embedding".into()));
    }
    Ok(EmbeddingIndex {
        ids,
        vectors,
        dim: params.dim(),
        excluded,
    })
}

/// Descending score, then ascending id. `0.0` and `-0.0` tie.
pub(crate) fn rank_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    let unsigned_zero = |x: f64| if x == 0.0 { 0.0 } else { x };
    unsigned_zero(b.0)
        .total_cmp(&unsigned_zero(a.0))
        .then_with(|| a.1.cmp(b.1))
}

/// Exact top-k by dot product (cosine for unit vectors).
pub fn search_top_k(index: &EmbeddingIndex, query: &[f64], k: usize) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if index.is_empty() {
        return Err(Error::InvalidArgument("index is empty".into()));
    }
    if query.len() != index.dim {
        return Err(Error::InvalidArgument(format!(
            "query has dimension {}, index has {}",
            query.len(),
            index.dim
        )));
    }
    let mut scored: Vec<(f64, usize)> = (0..index.len())
        .map(|i| {
            let s = index.vector(i).iter().zip(query).map(|(a, b)| a * b).sum();
            (s, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| {
        rank_order((a.0, &index.ids[a.1]), (b.0, &index.ids[b.1]))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    Ok(scored
        .into_iter()
        .map(|(s, i)| (index.ids[i].clone(), s))
        .collect())
}
