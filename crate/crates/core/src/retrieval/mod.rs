//! Exact dense retrieval and MAP / MRR / nDCG scoring over BEIR-style files.

mod beir;
mod benchmark;
mod index;
mod metrics;

pub use beir::{
    read_qrels, read_queries, relevant_sets, write_qrels, write_queries, EvalBundle, Qrels, Query,
};
pub use benchmark::{benchmark, benchmark_files, retrieve, BenchmarkReport, Fingerprint};
pub use index::{build_index, search_top_k, EmbeddingIndex, ExcludedPassage};
pub(crate) use index::rank_order;
pub use metrics::{compute_metrics, score_query, MetricReport, QueryMetrics, RankedRun, DEFAULT_K};
