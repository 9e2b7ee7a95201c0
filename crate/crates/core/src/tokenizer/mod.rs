//! WordPiece vocabularies: training, greedy encoding, and injection of domain
//! tokens into a base vocabulary's unused slots.

mod fragmentation;
mod normalize;
mod patch;
mod trainer;
mod vocab;

pub use fragmentation::{fragmentation_report, FragmentationStats};
pub use normalize::{normalize, pre_tokenize};
pub use patch::{build_chemvocab_patch, InjectedToken, InjectionReport};
pub use trainer::{count_words, train_from_counts, train_wordpiece, Candidate, MergeStep, TrainedVocab};
pub use vocab::{
    is_unused_token, WordPieceVocab, CONTINUATION_PREFIX, MAX_WORD_CHARS, STANDARD_SPECIALS, UNK,
};

/// Default size of a trained domain vocabulary.
pub const DEFAULT_TARGET_SIZE: usize = 4_000;
pub const DEFAULT_MIN_FREQUENCY: u64 = 2;
