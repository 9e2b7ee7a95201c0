//! Synthetic query generation through an OpenAI-compatible chat endpoint and
//! assembly of train pairs and eval benchmarks.

mod client;
mod generate;
mod mock;
mod prompt;
mod split;
mod validate;

pub use client::{
    ApiKey, ChatRequest, ChatTransport, ClientConfig, HttpTransport, RateLimiter, TransportError,
    API_KEY_ENV, DEFAULT_CONCURRENCY, DEFAULT_ENDPOINT,
};
pub use generate::{
    generate_pairs, read_checkpoint, read_pairs_jsonl, write_pairs_jsonl, write_refusals_jsonl,
    Outcome, PairRecord, RefusalEntry, RefusalLog, RefusalReason, Split,
};
pub use mock::{mock_query, MockTransport, MOCK_GENERATOR};
pub use prompt::{render_query_prompt, PROMPT_VERSION, REFUSAL_SENTINEL};
pub use split::split_train_eval;
pub use validate::{validate_query, Rejection};
