//! Uncased BERT-style text normalization and pre-tokenization.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

fn is_dropped(c: char) -> bool {
    c == '\u{0}'
        || c == '\u{fffd}'
        || (c.is_control() && !c.is_whitespace())
        || get_general_category(c) == GeneralCategory::NonspacingMark
}

/// Lowercase, NFD-decompose and strip combining accents and control characters.
pub fn normalize(text: &str) -> String {
    text.to_lowercase().nfd().filter(|&c| !is_dropped(c)).collect()
}

/// Normalizes `text` and splits it into words on whitespace; every punctuation
/// character becomes a word of its own.
pub fn pre_tokenize(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for c in normalize(text).chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            words.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_accents_and_lowercases() {
        assert_eq!(normalize("Café NAÏVE"), "cafe naive");
    }

    #[test]
    fn splits_punctuation() {
        assert_eq!(
            pre_tokenize("1-Chloro-2,4-dinitrobenzene  (x)"),
            vec!["1", "-", "chloro", "-", "2", ",", "4", "-", "dinitrobenzene", "(", "x", ")"]
        );
        assert!(pre_tokenize("   ").is_empty());
        assert!(pre_tokenize("").is_empty());
    }

    #[test]
    fn unicode_punctuation_is_split() {
        assert_eq!(pre_tokenize("a–b"), vec!["a", "–", "b"]);
    }
}
