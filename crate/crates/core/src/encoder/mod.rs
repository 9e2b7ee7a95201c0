//! Compact bi-encoder: embedding table, mean pooling, square projection and
//! L2 normalization, with analytic backpropagation and freeze masks.

mod checkpoint;
mod embed;
mod mask;
mod params;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, sha256_hex,
    CheckpointHeader, MAGIC,
};
pub use embed::{embed_backward, embed_batch, embed_forward, embed_text, EmbedTrace, Gradients};
pub use mask::{build_freeze_mask, AdaptationVariant, FreezeMask, MaskVariant};
pub use params::{
    init_encoder, EncoderParams, BASE_INIT_STD, DEFAULT_DIM, INJECTED_INIT_STD,
    PROJECTION_NOISE_STD,
};
