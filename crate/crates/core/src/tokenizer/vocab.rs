use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::normalize::pre_tokenize;
use crate::error::{Error, Result};

pub const CONTINUATION_PREFIX: &str = "##";
pub const UNK: &str = "[UNK]";
pub const STANDARD_SPECIALS: [&str; 5] = ["[PAD]", UNK, "[CLS]", "[SEP]", "[MASK]"];

/// Words longer than this many characters encode to a single `[UNK]`.
pub const MAX_WORD_CHARS: usize = 100;

/// Returns true for placeholder entries of the form `[unusedN]`.
pub fn is_unused_token(token: &str) -> bool {
    token
        .strip_prefix("[unused")
        .and_then(|rest| rest.strip_suffix(']'))
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

/// An ordered WordPiece vocabulary; a token's id is its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPieceVocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    specials: Vec<String>,
    unused_ids: Vec<u32>,
    unk_id: u32,
}

impl WordPieceVocab {
    /// Builds a vocabulary from an ordered token list. Specials are the standard
    /// BERT markers present in the list; `[UNK]` is mandatory.
    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.len() > u32::MAX as usize {
            return Err(Error::InvalidVocab("too many tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        let mut unused_ids = Vec::new();
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(Error::InvalidVocab(format!("empty token at id {id}")));
            }
            if index.insert(token.clone(), id as u32).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate token {token:?}")));
            }
            if is_unused_token(token) {
                unused_ids.push(id as u32);
            }
        }
        let specials: Vec<String> = STANDARD_SPECIALS
            .iter()
            .filter(|s| index.contains_key(**s))
            .map(|s| s.to_string())
            .collect();
        let unk_id = *index
            .get(UNK)
            .ok_or_else(|| Error::InvalidVocab("missing [UNK] token".into()))?;
        Ok(WordPieceVocab {
            tokens,
            index,
            specials,
            unused_ids,
            unk_id,
        })
    }

    /// Parses the `vocab.txt` format: one token per line, id = line number.
    pub fn from_vocab_txt(text: &str) -> Result<Self> {
        let text = text.strip_suffix('\n').unwrap_or(text);
        Self::from_tokens(text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)))
    }

    pub fn to_vocab_txt(&self) -> String {
        let mut out = String::with_capacity(self.tokens.iter().map(|t| t.len() + 1).sum());
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_vocab_txt(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_vocab_txt()).map_err(|e| Error::io(path, e))
    }

    /// Hex SHA-256 of the `vocab.txt` serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_vocab_txt().as_bytes()))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn specials(&self) -> &[String] {
        &self.specials
    }

    pub fn is_special(&self, token: &str) -> bool {
        self.specials.iter().any(|s| s == token)
    }

    pub fn unused_ids(&self) -> &[u32] {
        &self.unused_ids
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn continuation_prefix(&self) -> &'static str {
        CONTINUATION_PREFIX
    }

    /// Greedy longest-prefix encoding of one pre-tokenized word. If any position
    /// has no match the whole word becomes `[UNK]`.
    pub fn encode_word(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<(usize, char)> = word.char_indices().collect();
        if chars.is_empty() {
            return;
        }
        if chars.len() > MAX_WORD_CHARS {
            out.push(self.unk_id);
            return;
        }
        let byte_at = |i: usize| chars.get(i).map_or(word.len(), |&(b, _)| b);
        let mark = out.len();
        let mut piece = String::with_capacity(word.len() + 2);
        let mut start = 0;
        while start < chars.len() {
            let mut found = None;
            let mut end = chars.len();
            while end > start {
                piece.clear();
                if start > 0 {
                    piece.push_str(CONTINUATION_PREFIX);
                }
                piece.push_str(&word[byte_at(start)..byte_at(end)]);
                if let Some(&id) = self.index.get(piece.as_str()) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    out.push(id);
                    start = end;
                }
                None => {
                    out.truncate(mark);
                    out.push(self.unk_id);
                    return;
                }
            }
        }
    }

    /// Normalizes and pre-tokenizes `text`, then encodes every word.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for word in pre_tokenize(text) {
            self.encode_word(&word, &mut out);
        }
        out
    }

    /// Per-word encodings, in word order.
    pub fn encode_by_word(&self, text: &str) -> Vec<Vec<u32>> {
        pre_tokenize(text)
            .iter()
            .map(|w| {
                let mut ids = Vec::new();
                self.encode_word(w, &mut ids);
                ids
            })
            .collect()
    }

    pub fn decode_tokens(&self, ids: &[u32]) -> Vec<&str> {
        ids.iter().filter_map(|&id| self.token(id)).collect()
    }

    pub(crate) fn replace_token(&mut self, id: u32, token: String) {
        let old = std::mem::replace(&mut self.tokens[id as usize], token.clone());
        self.index.remove(&old);
        self.index.insert(token, id);
        self.unused_ids.retain(|&u| u != id);
    }
}
