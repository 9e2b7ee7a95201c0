//! Slow, direct reference implementations used to check the library.
//! None of this calls into the code under test beyond plain data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

// ---------------------------------------------------------------- WordPiece

fn pieces_of(word: &str) -> Vec<String> {
    word.chars()
        .enumerate()
        .map(|(i, c)| if i == 0 { c.to_string() } else { format!("##{c}") })
        .collect()
}

fn join(left: &str, right: &str) -> String {
    format!("{left}{}", right.strip_prefix("##").unwrap_or(right))
}

/// Reference WordPiece training: recounts every pair and every symbol from the
/// current segmentation on each iteration. Returns the vocabulary tokens in id
/// order and the merged string of each step.
pub fn brute_wordpiece(
    counts: &BTreeMap<String, u64>,
    target: usize,
    min_frequency: u64,
    specials: &[&str],
) -> (Vec<String>, Vec<String>) {
    let mut tokens: Vec<String> = specials.iter().map(|s| s.to_string()).collect();
    let alphabet: BTreeSet<String> = counts.keys().flat_map(|w| pieces_of(w)).collect();
    for a in alphabet {
        if !tokens.contains(&a) {
            tokens.push(a);
        }
    }
    let mut segs: Vec<(Vec<String>, u64)> = counts.iter().map(|(w, &c)| (pieces_of(w), c)).collect();
    let mut merges = Vec::new();
    while tokens.len() < target {
        let mut sym: BTreeMap<&str, u64> = BTreeMap::new();
        let mut pairs: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (seg, c) in &segs {
            for s in seg {
                *sym.entry(s).or_default() += c;
            }
            for w in seg.windows(2) {
                *pairs.entry((w[0].clone(), w[1].clone())).or_default() += c;
            }
        }
        // Score c / (l * r); exact comparison through cross multiplication.
        let mut best: Option<(&(String, String), u64, u128, u128)> = None;
        for (p, &c) in &pairs {
            if c < min_frequency {
                continue;
            }
            let denom = sym[p.0.as_str()] as u128 * sym[p.1.as_str()] as u128;
            let take = match best {
                None => true,
                Some((bp, _, bnum, bden)) => {
                    let lhs = c as u128 * bden;
                    let rhs = bnum * denom;
                    lhs > rhs
                        || (lhs == rhs && (join(&p.0, &p.1), &p.0) < (join(&bp.0, &bp.1), &bp.0))
                }
            };
            if take {
                best = Some((p, c, c as u128, denom));
            }
        }
        let Some(((l, r), ..)) = best else { break };
        let (l, r) = (l.clone(), r.clone());
        let merged = join(&l, &r);
        for (seg, _) in segs.iter_mut() {
            let mut out = Vec::new();
            let mut i = 0;
            while i < seg.len() {
                if i + 1 < seg.len() && seg[i] == l && seg[i + 1] == r {
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(seg[i].clone());
                    i += 1;
                }
            }
            *seg = out;
        }
        if !tokens.contains(&merged) {
            tokens.push(merged.clone());
        }
        merges.push(merged);
    }
    (tokens, merges)
}

/// Longest-prefix segmentation by enumerating every candidate prefix at every
/// position. `None` when some position has no match.
pub fn longest_prefix_oracle(vocab: &HashSet<String>, word: &str) -> Option<Vec<String>> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() > 100 {
        return None;
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut best: Option<(usize, String)> = None;
        for end in start + 1..=chars.len() {
            let body: String = chars[start..end].iter().collect();
            let piece = if start == 0 { body } else { format!("##{body}") };
            if vocab.contains(&piece) {
                best = Some((end, piece));
            }
        }
        let (end, piece) = best?;
        out.push(piece);
        start = end;
    }
    Some(out)
}

// ------------------------------------------------------------------ metrics

/// AP, RR and nDCG at `k` for a ranked id list with binary relevance.
pub fn brute_metrics(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> (f64, f64, f64) {
    let top: Vec<bool> = ranked.iter().take(k).map(|d| relevant.contains(d)).collect();
    let mut precisions = Vec::new();
    for (i, &rel) in top.iter().enumerate() {
        if rel {
            let hits = top[..=i].iter().filter(|&&r| r).count();
            precisions.push(hits as f64 / (i + 1) as f64);
        }
    }
    let ap = if relevant.is_empty() { 0.0 } else { precisions.iter().sum::<f64>() / relevant.len() as f64 };
    let rr = top.iter().position(|&r| r).map_or(0.0, |i| 1.0 / (i + 1) as f64);
    let dcg: f64 = top
        .iter()
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let ideal: f64 = (0..relevant.len().min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    let ndcg = if ideal > 0.0 { dcg / ideal } else { 0.0 };
    (ap, rr, ndcg)
}

// ------------------------------------------------------------------ encoder

/// Encoder forward pass: mean of embedding rows, projection, L2 normalization.
pub fn embed(emb: &[f64], proj: &[f64], dim: usize, ids: &[u32]) -> Vec<f64> {
    let mut h = vec![0.0; dim];
    for &id in ids {
        for j in 0..dim {
            h[j] += emb[id as usize * dim + j];
        }
    }
    for x in &mut h {
        *x /= ids.len() as f64;
    }
    let z: Vec<f64> = (0..dim)
        .map(|i| (0..dim).map(|j| proj[i * dim + j] * h[j]).sum())
        .collect();
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    z.into_iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// InfoNCE written directly from its definition.
pub fn info_nce(q: &[Vec<f64>], d: &[Vec<f64>], negs: Option<&[Vec<Vec<f64>>]>, tau: f64) -> f64 {
    let n = q.len();
    let mut total = 0.0;
    for i in 0..n {
        let pos = (dot(&q[i], &d[i]) / tau).exp();
        let mut denom = pos;
        match negs {
            None => {
                for j in (0..n).filter(|&j| j != i) {
                    denom += (dot(&q[i], &d[j]) / tau).exp();
                }
            }
            Some(negs) => {
                for m in &negs[i] {
                    denom += (dot(&q[i], m) / tau).exp();
                }
            }
        }
        total -= (pos / denom).ln();
    }
    total / n as f64
}

/// Loss of a batch of token-id examples through the whole encoder.
pub fn pipeline_loss(
    emb: &[f64],
    proj: &[f64],
    dim: usize,
    queries: &[Vec<u32>],
    positives: &[Vec<u32>],
    negatives: Option<&[Vec<Vec<u32>>]>,
    tau: f64,
) -> f64 {
    let q: Vec<Vec<f64>> = queries.iter().map(|x| embed(emb, proj, dim, x)).collect();
    let d: Vec<Vec<f64>> = positives.iter().map(|x| embed(emb, proj, dim, x)).collect();
    let n: Option<Vec<Vec<Vec<f64>>>> = negatives.map(|all| {
        all.iter()
            .map(|l| l.iter().map(|x| embed(emb, proj, dim, x)).collect())
            .collect()
    });
    info_nce(&q, &d, n.as_deref(), tau)
}

// ------------------------------------------------------------------- corpus

/// Keep/drop per passage text: fewer than `min_words` lowercased whitespace
/// words, or a mean natural-log unigram probability below `min_logprob`, where
/// the unigram model counts every passage and gives unseen words
/// `1 / (total + types + 1)`.
pub fn filter_oracle(texts: &[String], min_words: usize, min_logprob: f64) -> Vec<bool> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for t in texts {
        for w in t.split_whitespace() {
            *counts.entry(w.to_lowercase()).or_default() += 1.0;
            total += 1.0;
        }
    }
    let floor = 1.0 / (total + counts.len() as f64 + 1.0);
    texts
        .iter()
        .map(|t| {
            let words: Vec<String> = t.split_whitespace().map(|w| w.to_lowercase()).collect();
            if words.len() < min_words {
                return false;
            }
            let lp: f64 = words
                .iter()
                .map(|w| counts.get(w).map_or(floor, |c| c / total).ln())
                .sum::<f64>()
                / words.len() as f64;
            lp >= min_logprob
        })
        .collect()
}

// ------------------------------------------------------------------- mining

/// The `count` most similar passages other than `positive`, by a full scan.
pub fn brute_hard_negatives(
    query: &[f64],
    passages: &[(String, Vec<f64>)],
    positive: &str,
    count: usize,
) -> Vec<String> {
    let mut scored: Vec<(f64, &String)> = passages
        .iter()
        .filter(|(id, _)| id != positive)
        .map(|(id, v)| (dot(query, v), id))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
    scored.into_iter().take(count).map(|(_, id)| id.clone()).collect()
}

// ----------------------------------------------------------- gradient check

pub mod gradcheck {
    use std::collections::BTreeSet;

    use chembed_core::encoder::{EncoderParams, Gradients};
    use chembed_core::train::{batch_loss_and_gradients, NegativeMode, TrainExample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub const H: f64 = 1e-6;
    /// Central differences at h=1e-6 carry roughly 1e-10 of round-off, so
    /// relative error is measured against max(|analytic|, |numeric|, FLOOR).
    pub const FLOOR: f64 = 1e-5;

    pub struct Outcome {
        pub max_rel_error: f64,
        pub checked: usize,
    }

    /// Builds a random instance (dim ≤ 8, batch ≤ 4, H ≤ 3) and compares the
    /// analytic gradient of every parameter touched by the batch with a central
    /// difference of the reference loss.
    pub fn random_instance(seed: u64, mode: NegativeMode) -> Outcome {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.gen_range(2..=8);
        let vocab = rng.gen_range(4..=12);
        let n = match mode {
            NegativeMode::InBatch => rng.gen_range(2..=4),
            NegativeMode::Triplets => rng.gen_range(1..=4),
        };
        let h = rng.gen_range(1..=3);
        let tau = rng.gen_range(0.1..1.0);
        let text = |rng: &mut ChaCha8Rng| -> Vec<u32> {
            let len = rng.gen_range(1..=4);
            (0..len).map(|_| rng.gen_range(0..vocab as u32)).collect()
        };
        let examples: Vec<TrainExample> = (0..n)
            .map(|_| TrainExample {
                query: text(&mut rng),
                positive: text(&mut rng),
                negatives: match mode {
                    NegativeMode::InBatch => Vec::new(),
                    NegativeMode::Triplets => (0..h).map(|_| text(&mut rng)).collect(),
                },
            })
            .collect();
        let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let emb: Vec<f64> = (0..vocab * dim).map(|_| normal(&mut rng)).collect();
        let proj: Vec<f64> = (0..dim * dim)
            .map(|i| if i % (dim + 1) == 0 { 1.0 } else { 0.0 } + 0.3 * normal(&mut rng))
            .collect();
        let params = EncoderParams::from_parts(vocab, dim, emb.clone(), proj.clone(), BTreeSet::new()).unwrap();
        let batch: Vec<&TrainExample> = examples.iter().collect();
        let mut grads = Gradients::zeros(&params);
        batch_loss_and_gradients(&params, &batch, mode, tau, &mut grads).unwrap();

        let queries: Vec<Vec<u32>> = examples.iter().map(|e| e.query.clone()).collect();
        let positives: Vec<Vec<u32>> = examples.iter().map(|e| e.positive.clone()).collect();
        let negatives: Vec<Vec<Vec<u32>>> = examples.iter().map(|e| e.negatives.clone()).collect();
        let negs = match mode {
            NegativeMode::InBatch => None,
            NegativeMode::Triplets => Some(negatives.as_slice()),
        };
        let loss = |e: &[f64], p: &[f64]| super::pipeline_loss(e, p, dim, &queries, &positives, negs, tau);

        let mut used: BTreeSet<u32> = BTreeSet::new();
        for e in &examples {
            used.extend(e.query.iter().chain(&e.positive).chain(e.negatives.iter().flatten()));
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(FLOOR);
        let mut worst = 0.0f64;
        let mut checked = 0;
        for &id in &used {
            for j in 0..dim {
                let i = id as usize * dim + j;
                let (mut plus, mut minus) = (emb.clone(), emb.clone());
                plus[i] += H;
                minus[i] -= H;
                let numeric = (loss(&plus, &proj) - loss(&minus, &proj)) / (2.0 * H);
                worst = worst.max(rel(grads.embeddings[i], numeric));
                checked += 1;
            }
        }
        for i in 0..dim * dim {
            let (mut plus, mut minus) = (proj.clone(), proj.clone());
            plus[i] += H;
            minus[i] -= H;
            let numeric = (loss(&emb, &plus) - loss(&emb, &minus)) / (2.0 * H);
            worst = worst.max(rel(grads.projection[i], numeric));
            checked += 1;
        }
        // Rows outside the batch must receive exactly zero gradient.
        for id in (0..vocab as u32).filter(|id| !used.contains(id)) {
            let row = &grads.embeddings[id as usize * dim..(id as usize + 1) * dim];
            if row.iter().any(|&g| g != 0.0) {
                worst = f64::INFINITY;
            }
        }
        Outcome { max_rel_error: worst, checked }
    }
}
