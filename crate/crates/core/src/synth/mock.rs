use std::collections::BTreeSet;

use super::client::{ChatRequest, ChatTransport, TransportError};
use super::prompt::REFUSAL_SENTINEL;

/// Offline stand-in for an LLM. Builds a question from the three longest
/// words of the passage and refuses short passages and acknowledgments.
#[derive(Debug, Clone, Default)]
pub struct MockTransport;

pub const MOCK_GENERATOR: &str = "mock-v1";

const MIN_WORDS: usize = 20;
const REFUSE_MARKERS: [&str; 4] = ["funding", "funded", "grant", "acknowledg"];

fn passage_of(prompt: &str) -> &str {
    let start = prompt.find("<passage>\n").map_or(0, |i| i + "<passage>\n".len());
    let end = prompt[start..].find("\n</passage>").map_or(prompt.len(), |i| start + i);
    &prompt[start..end]
}

pub fn mock_query(passage: &str) -> Option<String> {
    let lower = passage.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric() && c != '-')
        .filter(|w| !w.is_empty())
        .collect();
    if words.len() < MIN_WORDS || REFUSE_MARKERS.iter().any(|m| lower.contains(m)) {
        return None;
    }
    let mut unique: Vec<&str> = words
        .iter()
        .copied()
        .filter(|w| w.chars().any(char::is_alphabetic))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    unique.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
    match unique.as_slice() {
        [a, b, c, ..] => Some(format!("What is known about the {a} and {b} of {c}?")),
        _ => None,
    }
}

impl ChatTransport for MockTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        Ok(mock_query(passage_of(&request.prompt)).unwrap_or_else(|| REFUSAL_SENTINEL.to_string()))
    }
}
