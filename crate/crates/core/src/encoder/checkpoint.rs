//! Binary checkpoint format.
//!
//! ```text
//! offset  size      content
//! 0       8         magic b"CHMBDCK1"
//! 8       4         header length H, u32 little-endian
//! 12      H         UTF-8 JSON header (CheckpointHeader)
//! 12+H    4·V·D     embedding table, row-major, f32 little-endian
//! ...     4·D·D     projection, row-major, f32 little-endian
//! ```
//!
//! Parameters are held as f64 in memory and rounded to f32 on write.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mask::AdaptationVariant;
use super::params::EncoderParams;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CHMBDCK1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub vocab_size: usize,
    pub dim: usize,
    pub injected_ids: Vec<u32>,
    pub seed: u64,
    pub variant: AdaptationVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<usize>,
}

impl CheckpointHeader {
    pub fn for_params(params: &EncoderParams, seed: u64, variant: AdaptationVariant) -> Self {
        CheckpointHeader {
            vocab_size: params.vocab_size(),
            dim: params.dim(),
            injected_ids: params.injected_ids().iter().copied().collect(),
            seed,
            variant,
            tau: None,
            epoch: None,
        }
    }
}

pub fn encode_checkpoint(params: &EncoderParams, header: &CheckpointHeader) -> Result<Vec<u8>> {
    if header.vocab_size != params.vocab_size() || header.dim != params.dim() {
        return Err(Error::Checkpoint("header does not describe these parameters".into()));
    }
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(12 + json.len() + 4 * params.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in params.embeddings.iter().chain(&params.projection) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(EncoderParams, CheckpointHeader)> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic"));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_start = 12 + hlen;
    if bytes.len() < body_start {
        return Err(bad("truncated header"));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[12..body_start])?;
    let (v, d) = (header.vocab_size, header.dim);
    let n_emb = v
        .checked_mul(d)
        .ok_or_else(|| bad("vocab_size * dim overflows"))?;
    let expected = (n_emb + d * d) * 4;
    let body = &bytes[body_start..];
    if body.len() != expected {
        return Err(Error::Checkpoint(format!(
            "parameter block is {} bytes, expected {expected}",
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    let embeddings: Vec<f64> = values.by_ref().take(n_emb).collect();
    let projection: Vec<f64> = values.collect();
    let injected: BTreeSet<u32> = header.injected_ids.iter().copied().collect();
    let params = EncoderParams::from_parts(v, d, embeddings, projection, injected)?;
    Ok((params, header))
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &EncoderParams, header: &CheckpointHeader) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(params, header)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(EncoderParams, CheckpointHeader)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_encoder;

    #[test]
    fn round_trip_through_f32() {
        let p = init_encoder(7, 3, 11, &[1u32, 4].into()).unwrap();
        let mut header = CheckpointHeader::for_params(&p, 11, AdaptationVariant::Plug);
        header.tau = Some(0.05);
        let bytes = encode_checkpoint(&p, &header).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        let (q, h) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(h, header);
        assert_eq!(q.injected_ids(), p.injected_ids());
        for (a, b) in p.embeddings.iter().zip(&q.embeddings) {
            assert_eq!(*a as f32, *b as f32);
        }
        // Re-encoding f32-exact parameters is byte-stable.
        assert_eq!(encode_checkpoint(&q, &h).unwrap(), bytes);
    }

    #[test]
    fn layout_is_documented_offsets() {
        let p = init_encoder(2, 1, 0, &BTreeSet::new()).unwrap();
        let header = CheckpointHeader::for_params(&p, 0, AdaptationVariant::Vanilla);
        let bytes = encode_checkpoint(&p, &header).unwrap();
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 12 + hlen + 4 * 3);
        let first = f32::from_le_bytes(bytes[12 + hlen..16 + hlen].try_into().unwrap());
        assert_eq!(first, p.embeddings[0] as f32);
    }

    #[test]
    fn corrupt_inputs() {
        assert!(decode_checkpoint(b"nope").is_err());
        let p = init_encoder(2, 2, 0, &BTreeSet::new()).unwrap();
        let mut bytes = encode_checkpoint(&p, &CheckpointHeader::for_params(&p, 0, AdaptationVariant::Full)).unwrap();
        bytes.pop();
        assert!(decode_checkpoint(&bytes).is_err());
    }
}
