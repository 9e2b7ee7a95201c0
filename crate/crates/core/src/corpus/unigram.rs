use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::passage::PassageStore;
use crate::error::{Error, Result};

/// Lowercased whitespace-separated words, the segmentation used for counting.
pub fn lm_words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Maximum-likelihood unigram model with natural-log probabilities.
///
/// Words never seen during construction get the add-one floor
/// `1 / (total + types + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramLM {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl UnigramLM {
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Result<Self> {
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(UnigramLM { counts, total })
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn types(&self) -> usize {
        self.counts.len()
    }

    pub fn probability(&self, word: &str) -> f64 {
        match self.counts.get(word) {
            Some(&c) => c as f64 / self.total as f64,
            None => 1.0 / (self.total as f64 + self.counts.len() as f64 + 1.0),
        }
    }

    pub fn log_prob(&self, word: &str) -> f64 {
        self.probability(word).ln()
    }

    /// Mean per-word log probability, or `None` for text without words.
    pub fn avg_log_prob(&self, text: &str) -> Option<f64> {
        let words = lm_words(text);
        if words.is_empty() {
            return None;
        }
        let sum: f64 = words.iter().map(|w| self.log_prob(w)).sum();
        Some(sum / words.len() as f64)
    }
}

pub fn build_unigram_lm(store: &PassageStore) -> Result<UnigramLM> {
    if store.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let counts = store
        .passages()
        .par_iter()
        .fold(BTreeMap::new, |mut acc: BTreeMap<String, u64>, p| {
            for w in lm_words(&p.text) {
                *acc.entry(w).or_insert(0) += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_insert(0) += c;
            }
            a
        });
    UnigramLM::from_counts(counts)
}
