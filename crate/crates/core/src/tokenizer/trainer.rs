//! WordPiece vocabulary training by likelihood-scored pair merges.
//!
//! Every word starts as its first character followed by `##`-prefixed
//! continuation characters. Each step merges the adjacent symbol pair with the
//! highest `count(pair) / (count(left) * count(right))`, ties going to the
//! lexicographically smallest merged string. Training stops at the target size
//! or when no pair reaches `min_frequency`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::normalize::pre_tokenize;
use super::vocab::{WordPieceVocab, CONTINUATION_PREFIX};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: String,
    pub right: String,
    pub merged: String,
    pub pair_count: u64,
    /// Vocabulary size after this step.
    pub vocab_size: usize,
}

/// A ranked injection candidate. Rank 1 is the best.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub rank: usize,
    pub frequency: u64,
}

#[derive(Debug, Clone)]
pub struct TrainedVocab {
    pub vocab: WordPieceVocab,
    pub merges: Vec<MergeStep>,
    word_counts: BTreeMap<String, u64>,
}

impl TrainedVocab {
    pub fn word_counts(&self) -> &BTreeMap<String, u64> {
        &self.word_counts
    }

    /// Ranks learned non-special tokens by how often they occur when the
    /// training corpus is encoded with the learned vocabulary (descending),
    /// ties broken lexicographically.
    pub fn rank_candidates(&self) -> Vec<Candidate> {
        let mut freq = vec![0u64; self.vocab.len()];
        let mut ids = Vec::new();
        for (word, &count) in &self.word_counts {
            ids.clear();
            self.vocab.encode_word(word, &mut ids);
            for &id in &ids {
                freq[id as usize] += count;
            }
        }
        let mut ranked: Vec<(String, u64)> = self
            .vocab
            .tokens()
            .iter()
            .zip(freq)
            .filter(|(t, _)| !self.vocab.is_special(t))
            .map(|(t, f)| (t.clone(), f))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked
            .into_iter()
            .enumerate()
            .map(|(i, (token, frequency))| Candidate {
                token,
                rank: i + 1,
                frequency,
            })
            .collect()
    }
}

pub(crate) fn merged_string(left: &str, right: &str) -> String {
    let tail = right.strip_prefix(CONTINUATION_PREFIX).unwrap_or(right);
    let mut s = String::with_capacity(left.len() + tail.len());
    s.push_str(left);
    s.push_str(tail);
    s
}

/// Splits a word into its initial character and `##`-prefixed continuation characters.
pub(crate) fn initial_symbols(word: &str) -> Vec<String> {
    word.chars()
        .enumerate()
        .map(|(i, c)| {
            if i == 0 {
                c.to_string()
            } else {
                format!("{CONTINUATION_PREFIX}{c}")
            }
        })
        .collect()
}

/// Counts pre-tokenized words across `texts`.
pub fn count_words<I, S>(texts: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = BTreeMap::new();
    for text in texts {
        for word in pre_tokenize(text.as_ref()) {
            *counts.entry(word).or_insert(0) += 1;
        }
    }
    counts
}

/// Compares scores `c1 / (l1 * r1)` and `c2 / (l2 * r2)` exactly.
pub(crate) fn cmp_score(c1: u64, l1: u64, r1: u64, c2: u64, l2: u64, r2: u64) -> Ordering {
    let lhs = c1 as u128 * l2 as u128 * r2 as u128;
    let rhs = c2 as u128 * l1 as u128 * r1 as u128;
    lhs.cmp(&rhs)
}

type Pair = (u32, u32);

struct MergeState {
    symbols: Vec<String>,
    symbol_ids: HashMap<String, u32>,
    symbol_counts: Vec<u64>,
    words: Vec<Vec<u32>>,
    word_freq: Vec<u64>,
    pair_counts: HashMap<Pair, u64>,
    pair_words: HashMap<Pair, Vec<usize>>,
}

impl MergeState {
    fn symbol(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.symbol_ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.symbol_ids.insert(s.to_string(), id);
        self.symbol_counts.push(0);
        id
    }

    fn add_word_pairs(&mut self, w: usize) {
        let freq = self.word_freq[w];
        for pair in self.words[w].windows(2) {
            let p = (pair[0], pair[1]);
            *self.pair_counts.entry(p).or_insert(0) += freq;
            self.pair_words.entry(p).or_default().push(w);
        }
    }

    fn remove_word_pairs(&mut self, w: usize) {
        let freq = self.word_freq[w];
        for pair in self.words[w].windows(2) {
            let p = (pair[0], pair[1]);
            if let Some(c) = self.pair_counts.get_mut(&p) {
                *c -= freq;
                if *c == 0 {
                    self.pair_counts.remove(&p);
                }
            }
        }
    }

    fn best_pair(&self, min_frequency: u64) -> Option<Pair> {
        let mut best: Option<(Pair, u64)> = None;
        for (&p, &c) in &self.pair_counts {
            if c < min_frequency {
                continue;
            }
            let Some((bp, bc)) = best else {
                best = Some((p, c));
                continue;
            };
            let ord = cmp_score(
                c,
                self.symbol_counts[p.0 as usize],
                self.symbol_counts[p.1 as usize],
                bc,
                self.symbol_counts[bp.0 as usize],
                self.symbol_counts[bp.1 as usize],
            );
            let better = match ord {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => {
                    let (l, r) = (&self.symbols[p.0 as usize], &self.symbols[p.1 as usize]);
                    let (bl, br) = (&self.symbols[bp.0 as usize], &self.symbols[bp.1 as usize]);
                    // Different pairs can spell the same string; the left piece decides then.
                    (merged_string(l, r), l) < (merged_string(bl, br), bl)
                }
            };
            if better {
                best = Some((p, c));
            }
        }
        best.map(|(p, _)| p)
    }

    fn apply_merge(&mut self, pair: Pair, new_id: u32) {
        let mut affected = self.pair_words.remove(&pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        for w in affected {
            if !self.words[w].windows(2).any(|x| (x[0], x[1]) == pair) {
                continue;
            }
            self.remove_word_pairs(w);
            let freq = self.word_freq[w];
            let old = std::mem::take(&mut self.words[w]);
            let mut merged = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && (old[i], old[i + 1]) == pair {
                    self.symbol_counts[pair.0 as usize] -= freq;
                    self.symbol_counts[pair.1 as usize] -= freq;
                    self.symbol_counts[new_id as usize] += freq;
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(old[i]);
                    i += 1;
                }
            }
            self.words[w] = merged;
            self.add_word_pairs(w);
        }
    }
}

/// Trains a WordPiece vocabulary from raw texts.
pub fn train_wordpiece<I, S>(
    texts: I,
    target_size: usize,
    min_frequency: u64,
    specials: &[&str],
) -> Result<TrainedVocab>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    train_from_counts(count_words(texts), target_size, min_frequency, specials)
}

pub fn train_from_counts(
    word_counts: BTreeMap<String, u64>,
    target_size: usize,
    min_frequency: u64,
    specials: &[&str],
) -> Result<TrainedVocab> {
    if word_counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if min_frequency == 0 {
        return Err(Error::InvalidArgument("min_frequency must be at least 1".into()));
    }

    let mut alphabet = BTreeSet::new();
    for word in word_counts.keys() {
        alphabet.extend(initial_symbols(word));
    }
    let mut vocab_tokens: Vec<String> = specials.iter().map(|s| s.to_string()).collect();
    for sym in &alphabet {
        if !specials.contains(&sym.as_str()) {
            vocab_tokens.push(sym.clone());
        }
    }
    if target_size < vocab_tokens.len() {
        return Err(Error::TargetTooSmall {
            target: target_size,
            required: vocab_tokens.len(),
        });
    }
    let mut in_vocab: BTreeSet<String> = vocab_tokens.iter().cloned().collect();

    let mut state = MergeState {
        symbols: Vec::new(),
        symbol_ids: HashMap::new(),
        symbol_counts: Vec::new(),
        words: Vec::with_capacity(word_counts.len()),
        word_freq: Vec::with_capacity(word_counts.len()),
        pair_counts: HashMap::new(),
        pair_words: HashMap::new(),
    };
    for (word, &freq) in &word_counts {
        let ids: Vec<u32> = initial_symbols(word).iter().map(|s| state.symbol(s)).collect();
        for &id in &ids {
            state.symbol_counts[id as usize] += freq;
        }
        state.words.push(ids);
        state.word_freq.push(freq);
    }
    for w in 0..state.words.len() {
        state.add_word_pairs(w);
    }

    let mut merges = Vec::new();
    while vocab_tokens.len() < target_size {
        let Some(pair) = state.best_pair(min_frequency) else {
            break;
        };
        let pair_count = state.pair_counts[&pair];
        let left = state.symbols[pair.0 as usize].clone();
        let right = state.symbols[pair.1 as usize].clone();
        let merged = merged_string(&left, &right);
        let new_id = state.symbol(&merged);
        state.apply_merge(pair, new_id);
        if in_vocab.insert(merged.clone()) {
            vocab_tokens.push(merged.clone());
        }
        merges.push(MergeStep {
            left,
            right,
            merged,
            pair_count,
            vocab_size: vocab_tokens.len(),
        });
    }

    Ok(TrainedVocab {
        vocab: WordPieceVocab::from_tokens(vocab_tokens)?,
        merges,
        word_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::vocab::STANDARD_SPECIALS;

    #[test]
    fn first_merge_prefers_rarer_parts() {
        // alphabet {a, ##b}; score(a,##b) = 1/(1*2) beats score(##b,##b) = 1/(2*2)
        let t = train_wordpiece(["abb"], STANDARD_SPECIALS.len() + 3, 1, &STANDARD_SPECIALS).unwrap();
        assert_eq!(t.merges[0].merged, "ab");
        assert!(t.vocab.contains("ab"));
        assert_eq!(t.vocab.len(), STANDARD_SPECIALS.len() + 3);
    }

    #[test]
    fn single_char_corpus_has_no_merges() {
        let t = train_wordpiece(["a"], STANDARD_SPECIALS.len() + 1, 1, &STANDARD_SPECIALS).unwrap();
        assert!(t.merges.is_empty());
        let mut expected: Vec<String> = STANDARD_SPECIALS.iter().map(|s| s.to_string()).collect();
        expected.push("a".into());
        assert_eq!(t.vocab.tokens(), expected.as_slice());
    }

    #[test]
    fn errors() {
        let empty: [&str; 0] = [];
        assert!(matches!(
            train_wordpiece(empty, 100, 1, &STANDARD_SPECIALS),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            train_wordpiece(["  "], 100, 1, &STANDARD_SPECIALS),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            train_wordpiece(["abc"], 6, 1, &STANDARD_SPECIALS),
            Err(Error::TargetTooSmall { required: 8, .. })
        ));
    }

    #[test]
    fn min_frequency_stops_training() {
        let t = train_wordpiece(["abc"], 100, 2, &STANDARD_SPECIALS).unwrap();
        assert!(t.merges.is_empty());
    }

    #[test]
    fn candidates_rank_by_encoded_frequency() {
        let t = train_wordpiece(["ab ab ab cd"], 100, 1, &STANDARD_SPECIALS).unwrap();
        let c = t.rank_candidates();
        assert_eq!(c[0].token, "ab");
        assert_eq!(c[0].frequency, 3);
        assert_eq!(c[0].rank, 1);
        assert!(c.iter().all(|x| !STANDARD_SPECIALS.contains(&x.token.as_str())));
        assert!(c.windows(2).all(|w| w[0].frequency >= w[1].frequency));
    }
}
