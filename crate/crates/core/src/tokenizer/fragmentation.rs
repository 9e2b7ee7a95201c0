use serde::{Deserialize, Serialize};

use super::vocab::WordPieceVocab;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentationStats {
    pub name_count: usize,
    pub mean_tokens_per_name: f64,
    /// Fraction of pre-tokenized words that encode to `[UNK]`.
    pub unk_word_rate: f64,
}

pub fn fragmentation_report<S: AsRef<str>>(
    vocab: &WordPieceVocab,
    names: &[S],
) -> Result<FragmentationStats> {
    if names.is_empty() {
        return Err(Error::InvalidArgument("names list is empty".into()));
    }
    let unk = vocab.unk_id();
    let mut tokens = 0usize;
    let mut words = 0usize;
    let mut unk_words = 0usize;
    for name in names {
        for ids in vocab.encode_by_word(name.as_ref()) {
            tokens += ids.len();
            words += 1;
            if ids == [unk] {
                unk_words += 1;
            }
        }
    }
    Ok(FragmentationStats {
        name_count: names.len(),
        mean_tokens_per_name: tokens as f64 / names.len() as f64,
        unk_word_rate: if words == 0 { 0.0 } else { unk_words as f64 / words as f64 },
    })
}
