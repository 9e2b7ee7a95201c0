use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PassageStore;
use crate::encoder::{embed_text, EncoderParams};
use crate::error::{Error, Result};
use crate::retrieval::{build_index, rank_order, EmbeddingIndex};
use crate::synth::PairRecord;
use crate::tokenizer::WordPieceVocab;

pub const DEFAULT_NEGATIVES: usize = 7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningStrategy {
    Hard,
    Random,
    /// `⌊3H/7⌋` hard negatives followed by random ones (3 + 4 at `H = 7`).
    #[default]
    #[serde(rename = "mixed_3h4r")]
    Mixed,
}

impl MiningStrategy {
    pub fn hard_count(self, h: usize) -> usize {
        match self {
            MiningStrategy::Hard => h,
            MiningStrategy::Random => 0,
            MiningStrategy::Mixed => 3 * h / 7,
        }
    }
}

impl FromStr for MiningStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(MiningStrategy::Hard),
            "random" => Ok(MiningStrategy::Random),
            "mixed" | "mixed_3h4r" => Ok(MiningStrategy::Mixed),
            other => Err(Error::InvalidArgument(format!("unknown mining strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub query: String,
    pub positive_id: String,
    pub negative_ids: Vec<String>,
}

/// Index positions of the `count` highest-scoring passages other than the
/// positive, by descending dot product then ascending id.
fn hard_negatives(index: &EmbeddingIndex, query: &[f64], positive: &str, count: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..index.len())
        .filter(|&i| index.ids()[i] != positive)
        .map(|i| {
            let s: f64 = index.vector(i).iter().zip(query).map(|(a, b)| a * b).sum();
            (s, i)
        })
        .collect();
    scored.sort_by(|a, b| rank_order((a.0, &index.ids()[a.1]), (b.0, &index.ids()[b.1])));
    scored.into_iter().take(count).map(|(_, i)| i).collect()
}

/// Attaches `h` distinct negatives to each pair. Hard negatives come from the
/// current encoder; random ones are drawn uniformly from the rest of the corpus
/// with a per-query stream of the seeded generator.
pub fn mine_negatives(
    params: &EncoderParams,
    vocab: &WordPieceVocab,
    pairs: &[PairRecord],
    corpus: &PassageStore,
    strategy: MiningStrategy,
    h: usize,
    seed: u64,
) -> Result<Vec<TripletRecord>> {
    if h == 0 {
        return Err(Error::InvalidArgument("H must be at least 1".into()));
    }
    if corpus.len() <= h {
        return Err(Error::InvalidArgument(format!(
            "corpus has {} passages; mining {h} negatives needs more than {h}",
            corpus.len()
        )));
    }
    let n_hard = strategy.hard_count(h);
    let index = if n_hard > 0 { Some(build_index(params, vocab, corpus)?) } else { None };

    pairs
        .par_iter()
        .enumerate()
        .map(|(qi, pair)| {
            let mut chosen: Vec<String> = Vec::with_capacity(h);
            if let Some(index) = &index {
                let q = embed_text(params, &vocab.encode(&pair.query))?;
                chosen.extend(
                    hard_negatives(index, &q, &pair.passage_id, n_hard)
                        .into_iter()
                        .map(|i| index.ids()[i].clone()),
                );
            }
            let taken: HashSet<&str> = chosen.iter().map(String::as_str).collect();
            let pool: Vec<&str> = corpus
                .iter()
                .map(|p| p.id.as_str())
                .filter(|id| *id != pair.passage_id && !taken.contains(id))
                .collect();
            let need = h - chosen.len();
            if pool.len() < need {
                return Err(Error::InvalidArgument(format!(
                    "only {} candidate negatives for passage {}",
                    pool.len() + chosen.len(),
                    pair.passage_id
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(qi as u64);
            chosen.extend(sample(&mut rng, pool.len(), need).into_iter().map(|i| pool[i].to_string()));
            Ok(TripletRecord {
                query: pair.query.clone(),
                positive_id: pair.passage_id.clone(),
                negative_ids: chosen,
            })
        })
        .collect()
}

pub fn write_triplets_jsonl(triplets: &[TripletRecord], mut w: impl std::io::Write) -> std::io::Result<()> {
    for t in triplets {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_triplets_jsonl(path: &Path) -> Result<Vec<TripletRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
