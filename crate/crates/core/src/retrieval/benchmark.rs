use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beir::{EvalBundle, Query};
use super::index::{build_index, search_top_k, EmbeddingIndex, ExcludedPassage};
use super::metrics::{compute_metrics, MetricReport, RankedRun};
use crate::encoder::{embed_text, EncoderParams};
use crate::error::{Error, Result};
use crate::tokenizer::WordPieceVocab;

/// Identifies what produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub vocab_sha256: String,
    pub checkpoint_sha256: Option<String>,
    pub k: usize,
    pub tau: Option<f64>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub fingerprint: Fingerprint,
    pub corpus_size: usize,
    pub query_count: usize,
    pub excluded_passages: Vec<ExcludedPassage>,
    pub metrics: MetricReport,
}

/// Ranks the index for every query. A query that tokenizes to nothing gets an
/// empty ranking.
pub fn retrieve(
    params: &EncoderParams,
    vocab: &WordPieceVocab,
    index: &EmbeddingIndex,
    queries: &[Query],
    k: usize,
) -> Result<RankedRun> {
    let ranked: Vec<Result<(String, Vec<(String, f64)>)>> = queries
        .par_iter()
        .map(|q| {
            let list = match embed_text(params, &vocab.encode(&q.text)) {
                Ok(v) => search_top_k(index, &v, k)?,
                Err(Error::EmptyInput | Error::DegenerateEmbedding) => Vec::new(),
                Err(e) => return Err(e),
            };
            Ok((q.id.clone(), list))
        })
        .collect();
    ranked.into_iter().collect()
}

/// Embeds the corpus, retrieves the top `k` for every judged query and scores
/// the run.
pub fn benchmark(
    params: &EncoderParams,
    vocab: &WordPieceVocab,
    bundle: &EvalBundle,
    k: usize,
    checkpoint_sha256: Option<String>,
    tau: Option<f64>,
) -> Result<BenchmarkReport> {
    if vocab.len() != params.vocab_size() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} tokens but the encoder expects {}",
            vocab.len(),
            params.vocab_size()
        )));
    }
    bundle.validate()?;
    let index = build_index(params, vocab, &bundle.corpus)?;
    let judged: Vec<Query> = bundle
        .queries
        .iter()
        .filter(|q| bundle.qrels.contains_key(&q.id))
        .cloned()
        .collect();
    let run = retrieve(params, vocab, &index, &judged, k)?;
    let metrics = compute_metrics(&run, &bundle.qrels, k)?;
    Ok(BenchmarkReport {
        fingerprint: Fingerprint {
            vocab_sha256: vocab.digest(),
            checkpoint_sha256,
            k,
            tau,
            dim: params.dim(),
        },
        corpus_size: bundle.corpus.len(),
        query_count: judged.len(),
        excluded_passages: index.excluded().to_vec(),
        metrics,
    })
}

pub fn benchmark_files(
    params: &EncoderParams,
    vocab: &WordPieceVocab,
    corpus: &Path,
    queries: &Path,
    qrels: &Path,
    k: usize,
) -> Result<BenchmarkReport> {
    let bundle = EvalBundle::load(corpus, queries, qrels)?;
    benchmark(params, vocab, &bundle, k, None, None)
}
