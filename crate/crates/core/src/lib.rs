//! Domain adaptation toolkit for chemistry text embeddings.
//!
//! The crate covers the whole desk-scale pipeline: a WordPiece trainer and
//! unused-slot vocabulary patcher ([`tokenizer`]), corpus quality filtering
//! ([`corpus`]), synthetic query generation through an OpenAI-compatible chat
//! endpoint ([`synth`]), a compact mean-pooled bi-encoder ([`encoder`]),
//! InfoNCE training under four freeze schedules ([`train`]) and exact dense
//! retrieval evaluation ([`retrieval`]).

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod retrieval;
pub mod synth;
pub mod tokenizer;
pub mod topics;
pub mod train;

pub use error::{Error, Result};
