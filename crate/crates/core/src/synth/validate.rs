use serde::{Deserialize, Serialize};

const YES_NO_OPENERS: [&str; 8] = ["is", "are", "does", "do", "can", "did", "was", "were"];

const SELF_REFERENCES: [&str; 10] = [
    "this paragraph",
    "the paragraph",
    "this passage",
    "the passage",
    "this text",
    "the text",
    "this article",
    "this excerpt",
    "the excerpt",
    "the above",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Empty,
    YesNo,
    SelfReference,
    MultipleQuestions,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rejection::Empty => "empty query",
            Rejection::YesNo => "yes/no question",
            Rejection::SelfReference => "refers to the source text",
            Rejection::MultipleQuestions => "more than one question mark",
        })
    }
}

fn lowercase_words(q: &str) -> Vec<String> {
    q.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Checks a generated query against the generation rules.
pub fn validate_query(q: &str) -> Result<(), Rejection> {
    let q = q.trim();
    if q.is_empty() {
        return Err(Rejection::Empty);
    }
    let words = lowercase_words(q);
    if words.is_empty() {
        return Err(Rejection::Empty);
    }
    if YES_NO_OPENERS.contains(&words[0].as_str()) {
        return Err(Rejection::YesNo);
    }
    let joined = format!(" {} ", words.join(" "));
    if SELF_REFERENCES.iter().any(|p| joined.contains(&format!(" {p} "))) {
        return Err(Rejection::SelfReference);
    }
    if q.matches('?').count() > 1 {
        return Err(Rejection::MultipleQuestions);
    }
    Ok(())
}
