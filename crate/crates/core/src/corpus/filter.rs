use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::passage::{Passage, PassageStore};
use super::unigram::{lm_words, UnigramLM};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_WORDS: usize = 50;
pub const DEFAULT_MIN_AVG_LOGPROB: f64 = -20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    TooShort,
    LowLogprob,
    ExcludedSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub passage_id: String,
    pub kept: bool,
    pub reasons: Vec<FilterReason>,
    pub word_count: usize,
    pub avg_logprob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub min_words: usize,
    pub min_avg_logprob: f64,
    /// Section labels (case-insensitive) whose paragraphs are dropped.
    /// Passages without a section label are never dropped by this rule.
    pub excluded_sections: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_words: DEFAULT_MIN_WORDS,
            min_avg_logprob: DEFAULT_MIN_AVG_LOGPROB,
            excluded_sections: Vec::new(),
        }
    }
}

pub fn decide(passage: &Passage, lm: &UnigramLM, config: &FilterConfig) -> FilterDecision {
    let words = lm_words(&passage.text);
    let avg_logprob = lm.avg_log_prob(&passage.text);
    let mut reasons = Vec::new();
    if words.len() < config.min_words {
        reasons.push(FilterReason::TooShort);
    }
    if avg_logprob.is_some_and(|lp| lp < config.min_avg_logprob) {
        reasons.push(FilterReason::LowLogprob);
    }
    if let Some(section) = &passage.section {
        if config
            .excluded_sections
            .iter()
            .any(|s| s.eq_ignore_ascii_case(section.trim()))
        {
            reasons.push(FilterReason::ExcludedSection);
        }
    }
    FilterDecision {
        passage_id: passage.id.clone(),
        kept: reasons.is_empty(),
        reasons,
        word_count: words.len(),
        avg_logprob,
    }
}

/// Drops passages that are too short or have a low mean unigram log probability.
/// Returns the kept passages (input order) and one decision per input passage.
pub fn filter_passages(
    store: &PassageStore,
    lm: &UnigramLM,
    config: &FilterConfig,
) -> Result<(PassageStore, Vec<FilterDecision>)> {
    if !config.min_avg_logprob.is_finite() {
        return Err(Error::InvalidArgument("min_avg_logprob must be finite".into()));
    }
    let decisions: Vec<FilterDecision> = store
        .passages()
        .par_iter()
        .map(|p| decide(p, lm, config))
        .collect();
    let kept = PassageStore::from_passages(
        store
            .iter()
            .zip(&decisions)
            .filter(|(_, d)| d.kept)
            .map(|(p, _)| p.clone()),
    )?;
    Ok((kept, decisions))
}
