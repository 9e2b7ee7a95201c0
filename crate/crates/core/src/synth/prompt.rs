use crate::corpus::Passage;

pub const REFUSAL_SENTINEL: &str = "UNSUITABLE";
pub const PROMPT_VERSION: &str = "query-v1";

const INSTRUCTIONS: &str = "You write search queries for a chemistry literature retrieval benchmark.

Read the passage below and produce exactly one clear, meaningful chemistry question that the passage answers.

Rules:
- Output the question only, on a single line, with a single question mark.
- Ask about the chemistry itself: substances, reactions, properties, methods or results.
- Do not ask superficial questions and do not ask yes/no questions.
- Do not refer to the text itself. Phrases such as \"according to this paragraph\", \"in this passage\" or \"the text\" are forbidden.
- If the passage has no scientific content worth asking about (funding acknowledgments, author lists, overly general conclusions, very short fragments), reply with the single word UNSUITABLE and nothing else.
";

/// Renders the query-generation prompt for one passage. The passage text
/// appears exactly once, between `<passage>` tags.
pub fn render_query_prompt(passage: &Passage) -> String {
    let mut out = String::with_capacity(INSTRUCTIONS.len() + passage.text.len() + 64);
    out.push_str(INSTRUCTIONS);
    out.push('\n');
    if !passage.title.is_empty() {
        out.push_str("Title: ");
        out.push_str(&passage.title);
        out.push('\n');
    }
    out.push_str("<passage>\n");
    out.push_str(&passage.text);
    out.push_str("\n</passage>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passage_appears_once_and_constraints_are_stated() {
        let p = Passage::new("p1", "Sodium borohydride reduces ketones to secondary alcohols.");
        let prompt = render_query_prompt(&p);
        assert_eq!(prompt.matches(&p.text).count(), 1);
        assert!(prompt.contains("according to this paragraph"));
        assert!(prompt.contains("exactly one"));
        assert!(prompt.contains("yes/no"));
        assert!(prompt.contains(REFUSAL_SENTINEL));
        assert!(prompt.contains("funding acknowledgments"));
    }
}
