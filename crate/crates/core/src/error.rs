use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("target vocabulary size {target} is below the initial alphabet size {required}")]
    TargetTooSmall { target: usize, required: usize },

    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),

    #[error("cannot inject {requested} tokens: only {available} unused slots (short by {shortfall})")]
    NotEnoughUnusedSlots {
        requested: usize,
        available: usize,
        shortfall: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate embedding")]
    DegenerateEmbedding,

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    IdOutOfRange { id: u32, vocab_size: usize },

    #[error("no negatives available")]
    NoNegatives,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss at epoch {epoch}, step {step} (lr {lr:e}): {detail}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        lr: f64,
        detail: String,
    },

    #[error("query {0:?} has no relevance judgments")]
    MissingQrels(String),

    #[error("qrels reference unknown {kind} id {id:?}")]
    DanglingQrels { kind: &'static str, id: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("transport: {0}")]
    Transport(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
