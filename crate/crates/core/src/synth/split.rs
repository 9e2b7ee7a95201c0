use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::generate::{PairRecord, Split};
use crate::corpus::{Passage, PassageStore};
use crate::error::{Error, Result};
use crate::retrieval::{EvalBundle, Qrels, Query};

/// Splits pairs by passage so no passage appears on both sides. The eval side
/// becomes a corpus of its passages, one query per pair and one qrels row
/// (score 1) per query.
pub fn split_train_eval(
    pairs: &[PairRecord],
    eval_fraction: f64,
    seed: u64,
) -> Result<(Vec<PairRecord>, EvalBundle)> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::InvalidArgument("eval_fraction must lie in (0, 1)".into()));
    }
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 pairs to split, got {}",
            pairs.len()
        )));
    }
    let mut passage_ids: Vec<&str> = Vec::new();
    let mut seen = HashMap::new();
    for p in pairs {
        if seen.insert(p.passage_id.as_str(), ()).is_none() {
            passage_ids.push(&p.passage_id);
        }
    }
    if passage_ids.len() < 2 {
        return Err(Error::InvalidArgument("all pairs share one passage".into()));
    }
    let mut order = passage_ids.clone();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_eval = ((eval_fraction * order.len() as f64).round() as usize).clamp(1, order.len() - 1);
    let eval_ids: HashMap<&str, ()> = order[..n_eval].iter().map(|&id| (id, ())).collect();

    let mut train = Vec::new();
    let mut corpus = PassageStore::new();
    let mut queries = Vec::new();
    let mut qrels = Qrels::new();
    let mut per_passage: HashMap<&str, usize> = HashMap::new();
    for p in pairs {
        if !eval_ids.contains_key(p.passage_id.as_str()) {
            train.push(PairRecord { split: Some(Split::Train), ..p.clone() });
            continue;
        }
        let n = per_passage.entry(&p.passage_id).or_insert(0);
        if *n == 0 {
            corpus.push(Passage::new(p.passage_id.clone(), p.passage_text.clone()))?;
        }
        let qid = match *n {
            0 => format!("q-{}", p.passage_id),
            k => format!("q-{}-{k}", p.passage_id),
        };
        *n += 1;
        queries.push(Query { id: qid.clone(), text: p.query.clone() });
        qrels.insert(qid, BTreeMap::from([(p.passage_id.clone(), 1)]));
    }
    let bundle = EvalBundle { corpus, queries, qrels };
    bundle.validate()?;
    Ok((train, bundle))
}
