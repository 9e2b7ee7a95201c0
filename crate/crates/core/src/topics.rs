//! Synthetic topic corpus for desk-scale retrieval experiments.
//!
//! Every topic owns a set of facets. A facet has two surface forms, one used
//! in queries and one in passages, so an untrained encoder cannot match them
//! and a trained one has to learn the alignment from pairs. Each passage
//! covers a unique combination of facets of one topic; its query names the
//! same facets in query form.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Passage, PassageStore};
use crate::error::{Error, Result};
use crate::retrieval::{EvalBundle, Qrels, Query};
use crate::synth::{PairRecord, Split};
use crate::tokenizer::{WordPieceVocab, STANDARD_SPECIALS};

#[derive(Debug, Clone, PartialEq)]
pub struct TopicCorpusConfig {
    pub topics: usize,
    pub facets_per_topic: usize,
    pub facets_per_passage: usize,
    pub eval_passages_per_topic: usize,
    pub train_pairs_per_topic: usize,
    /// Size of the shared filler vocabulary.
    pub filler_words: usize,
    pub passage_filler: usize,
    pub query_filler: usize,
    pub seed: u64,
}

impl Default for TopicCorpusConfig {
    fn default() -> Self {
        TopicCorpusConfig {
            topics: 20,
            facets_per_topic: 10,
            facets_per_passage: 3,
            eval_passages_per_topic: 20,
            train_pairs_per_topic: 100,
            filler_words: 40,
            passage_filler: 4,
            query_filler: 1,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopicCorpus {
    pub vocab: WordPieceVocab,
    pub train_pairs: Vec<PairRecord>,
    pub eval: EvalBundle,
}

fn query_word(topic: usize, facet: usize) -> String {
    format!("q{topic:02}k{facet:02}")
}

fn passage_word(topic: usize, facet: usize) -> String {
    format!("p{topic:02}m{facet:02}")
}

fn filler_word(i: usize) -> String {
    format!("w{i:03}")
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn sentence(
    words: Vec<String>,
    fillers: usize,
    filler_pool: usize,
    rng: &mut ChaCha8Rng,
) -> String {
    let mut all = words;
    for _ in 0..fillers {
        all.push(filler_word(rng.gen_range(0..filler_pool)));
    }
    all.shuffle(rng);
    all.join(" ")
}

pub fn generate_topic_corpus(config: &TopicCorpusConfig) -> Result<TopicCorpus> {
    let combos = combinations(config.facets_per_topic, config.facets_per_passage);
    let per_topic = config.eval_passages_per_topic + config.train_pairs_per_topic;
    if config.topics == 0 || config.filler_words == 0 || combos.len() < per_topic {
        return Err(Error::InvalidArgument(format!(
            "{} facet combinations per topic cannot cover {per_topic} passages",
            combos.len()
        )));
    }
    let mut tokens: Vec<String> = STANDARD_SPECIALS.iter().map(|s| s.to_string()).collect();
    let mut words = BTreeSet::new();
    for t in 0..config.topics {
        for f in 0..config.facets_per_topic {
            words.insert(query_word(t, f));
            words.insert(passage_word(t, f));
        }
    }
    words.extend((0..config.filler_words).map(filler_word));
    tokens.extend(words);
    let vocab = WordPieceVocab::from_tokens(tokens)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut train_pairs = Vec::new();
    let mut corpus = PassageStore::new();
    let mut queries = Vec::new();
    let mut qrels = Qrels::new();
    for t in 0..config.topics {
        let mut picked = combos.clone();
        picked.shuffle(&mut rng);
        for (j, combo) in picked.iter().take(per_topic).enumerate() {
            let passage_text = sentence(
                combo.iter().map(|&f| passage_word(t, f)).collect(),
                config.passage_filler,
                config.filler_words,
                &mut rng,
            );
            let query = sentence(
                combo.iter().map(|&f| query_word(t, f)).collect(),
                config.query_filler,
                config.filler_words,
                &mut rng,
            );
            if j < config.eval_passages_per_topic {
                let pid = format!("t{t:02}-e{j:03}");
                let qid = format!("q-{pid}");
                corpus.push(Passage::new(pid.clone(), passage_text))?;
                queries.push(Query { id: qid.clone(), text: query });
                qrels.insert(qid, BTreeMap::from([(pid, 1)]));
            } else {
                train_pairs.push(PairRecord {
                    query,
                    passage_id: format!("t{t:02}-r{j:03}"),
                    passage_text,
                    generator: "topic-synthetic".into(),
                    split: Some(Split::Train),
                });
            }
        }
    }
    Ok(TopicCorpus {
        vocab,
        train_pairs,
        eval: EvalBundle { corpus, queries, qrels },
    })
}
