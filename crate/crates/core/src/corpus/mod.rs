//! Paragraph corpora: JSONL ingestion, a unigram language model, and the
//! length / log-probability quality filter.

mod filter;
mod passage;
mod unigram;

pub use filter::{
    decide, filter_passages, FilterConfig, FilterDecision, FilterReason, DEFAULT_MIN_AVG_LOGPROB,
    DEFAULT_MIN_WORDS,
};
pub use passage::{ingest_passages, Passage, PassageStore, Source};
pub use unigram::{build_unigram_lm, lm_words, UnigramLM};
