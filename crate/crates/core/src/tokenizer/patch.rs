use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::trainer::Candidate;
use super::vocab::WordPieceVocab;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedToken {
    pub token: String,
    pub id: u32,
    pub source_rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub injected: Vec<InjectedToken>,
    pub skipped_duplicates: Vec<String>,
    pub remaining_unused: usize,
}

impl InjectionReport {
    pub fn injected_ids(&self) -> Vec<u32> {
        self.injected.iter().map(|t| t.id).collect()
    }
}

/// Writes the best `max_inject` candidates not already in `base` into its
/// `[unusedN]` slots, in ascending slot order. The vocabulary size is unchanged.
pub fn build_chemvocab_patch(
    base: &WordPieceVocab,
    candidates: &[Candidate],
    max_inject: usize,
) -> Result<(WordPieceVocab, InjectionReport)> {
    let available = base.unused_ids().len();
    if max_inject > available {
        return Err(Error::NotEnoughUnusedSlots {
            requested: max_inject,
            available,
            shortfall: max_inject - available,
        });
    }

    let mut ranked: Vec<&Candidate> = candidates.iter().collect();
    ranked.sort_by_key(|c| c.rank);

    let mut patched = base.clone();
    let slots = base.unused_ids().to_vec();
    let mut report = InjectionReport::default();
    let mut seen = HashSet::new();
    for cand in ranked {
        if report.injected.len() == max_inject {
            break;
        }
        if !seen.insert(cand.token.as_str()) {
            continue;
        }
        if base.contains(&cand.token) {
            report.skipped_duplicates.push(cand.token.clone());
            continue;
        }
        let id = slots[report.injected.len()];
        patched.replace_token(id, cand.token.clone());
        report.injected.push(InjectedToken {
            token: cand.token.clone(),
            id,
            source_rank: cand.rank,
        });
    }
    report.remaining_unused = patched.unused_ids().len();
    Ok((patched, report))
}
