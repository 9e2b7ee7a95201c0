use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::EncoderParams;
use crate::error::{Error, Result};

/// Which parameters a training phase may update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskVariant {
    Vanilla,
    Full,
    Plug,
    ProgressivePhase1,
    ProgressivePhase2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreezeMask {
    pub embedding_rows_trainable: Vec<bool>,
    pub projection_trainable: bool,
}

impl FreezeMask {
    pub fn all_trainable(vocab_size: usize) -> Self {
        FreezeMask {
            embedding_rows_trainable: vec![true; vocab_size],
            projection_trainable: true,
        }
    }

    pub fn trainable_rows(&self) -> impl Iterator<Item = u32> + '_ {
        self.embedding_rows_trainable
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| i as u32)
    }
}

pub fn build_freeze_mask(params: &EncoderParams, variant: MaskVariant) -> Result<FreezeMask> {
    let injected_only = || -> Result<Vec<bool>> {
        if params.injected_ids().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{variant} schedule needs injected token ids"
            )));
        }
        let mut rows = vec![false; params.vocab_size()];
        for &id in params.injected_ids() {
            rows[id as usize] = true;
        }
        Ok(rows)
    };
    Ok(match variant {
        MaskVariant::Vanilla | MaskVariant::Full => FreezeMask::all_trainable(params.vocab_size()),
        MaskVariant::ProgressivePhase2 => {
            injected_only()?;
            FreezeMask::all_trainable(params.vocab_size())
        }
        MaskVariant::Plug => FreezeMask {
            embedding_rows_trainable: injected_only()?,
            projection_trainable: true,
        },
        MaskVariant::ProgressivePhase1 => FreezeMask {
            embedding_rows_trainable: injected_only()?,
            projection_trainable: false,
        },
    })
}

/// The four tokenizer-adaptation training variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationVariant {
    /// Base vocabulary, no injected tokens, everything trainable.
    Vanilla,
    /// Patched vocabulary, everything trainable.
    Full,
    /// Patched vocabulary; only injected rows of the embedding table (plus the
    /// projection) are trainable.
    Plug,
    /// Injected rows alone first, then everything.
    Progressive,
}

impl fmt::Display for MaskVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskVariant::Vanilla => "vanilla",
            MaskVariant::Full => "full",
            MaskVariant::Plug => "plug",
            MaskVariant::ProgressivePhase1 => "progressive_phase1",
            MaskVariant::ProgressivePhase2 => "progressive_phase2",
        })
    }
}

impl fmt::Display for AdaptationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdaptationVariant::Vanilla => "vanilla",
            AdaptationVariant::Full => "full",
            AdaptationVariant::Plug => "plug",
            AdaptationVariant::Progressive => "progressive",
        })
    }
}

impl FromStr for AdaptationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(AdaptationVariant::Vanilla),
            "full" => Ok(AdaptationVariant::Full),
            "plug" => Ok(AdaptationVariant::Plug),
            "progressive" | "prog" => Ok(AdaptationVariant::Progressive),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}
