use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::beir::Qrels;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 10;

/// Per query id, the retrieved (passage id, score) list in rank order.
pub type RankedRun = BTreeMap<String, Vec<(String, f64)>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub average_precision: f64,
    pub reciprocal_rank: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub k: usize,
    pub map_at_k: f64,
    pub mrr_at_k: f64,
    pub ndcg_at_k: f64,
    pub per_query: Vec<QueryMetrics>,
}

/// Binary-gain metrics for one ranked list. Average precision is normalized by
/// the total number of relevant documents; nDCG uses a `1 / log2(rank + 1)`
/// discount and the ideal ranking truncated at `k`.
pub fn score_query(ranked: &[(String, f64)], relevant: &HashSet<&str>, k: usize) -> (f64, f64, f64) {
    if relevant.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut seen = HashSet::new();
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    let mut rr = 0.0;
    let mut dcg = 0.0;
    for (i, (doc, _)) in ranked.iter().take(k).enumerate() {
        let rank = i + 1;
        if !seen.insert(doc.as_str()) || !relevant.contains(doc.as_str()) {
            continue;
        }
        hits += 1;
        precision_sum += hits as f64 / rank as f64;
        if rr == 0.0 {
            rr = 1.0 / rank as f64;
        }
        dcg += 1.0 / ((rank + 1) as f64).log2();
    }
    let idcg: f64 = (1..=relevant.len().min(k))
        .map(|rank| 1.0 / ((rank + 1) as f64).log2())
        .sum();
    (precision_sum / relevant.len() as f64, rr, dcg / idcg)
}

/// MAP@k, MRR@k and nDCG@k over every query of `run`. Documents with a
/// positive qrels score are relevant.
pub fn compute_metrics(run: &RankedRun, qrels: &Qrels, k: usize) -> Result<MetricReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if run.is_empty() {
        return Err(Error::InvalidArgument("run has no queries".into()));
    }
    let mut per_query = Vec::with_capacity(run.len());
    for (qid, ranked) in run {
        let judged = qrels.get(qid).ok_or_else(|| Error::MissingQrels(qid.clone()))?;
        let relevant: HashSet<&str> = judged
            .iter()
            .filter(|(_, &s)| s > 0)
            .map(|(d, _)| d.as_str())
            .collect();
        let (ap, rr, ndcg) = score_query(ranked, &relevant, k);
        per_query.push(QueryMetrics {
            query_id: qid.clone(),
            average_precision: ap,
            reciprocal_rank: rr,
            ndcg,
        });
    }
    let n = per_query.len() as f64;
    let mean = |f: fn(&QueryMetrics) -> f64| per_query.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        k,
        map_at_k: mean(|q| q.average_precision),
        mrr_at_k: mean(|q| q.reciprocal_rank),
        ndcg_at_k: mean(|q| q.ndcg),
        per_query,
    })
}
