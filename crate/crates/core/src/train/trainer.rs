use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::info_nce_loss;
use super::mining::{MiningStrategy, TripletRecord, DEFAULT_NEGATIVES};
use super::optimizer::{Adam, AdamConfig};
use super::schedule::{lr_at_step_with, DecayShape, DEFAULT_WARMUP_FRACTION};
use crate::corpus::PassageStore;
use crate::encoder::{
    build_freeze_mask, embed_backward, embed_forward, save_checkpoint, AdaptationVariant,
    CheckpointHeader, EmbedTrace, EncoderParams, Gradients, MaskVariant,
};
use crate::error::{Error, Result};
use crate::retrieval::{benchmark, EvalBundle, DEFAULT_K};
use crate::synth::PairRecord;
use crate::tokenizer::WordPieceVocab;

pub const DEFAULT_TAU: f64 = 0.05;
pub const DEFAULT_PHASE1_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeMode {
    #[default]
    InBatch,
    Triplets,
}

impl FromStr for NegativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-batch" | "in_batch" => Ok(NegativeMode::InBatch),
            "triplets" => Ok(NegativeMode::Triplets),
            other => Err(Error::InvalidArgument(format!("unknown negative mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub tau: f64,
    pub negative_mode: NegativeMode,
    pub negatives_per_query: usize,
    pub mining_strategy: MiningStrategy,
    pub batch_size: usize,
    pub epochs: usize,
    pub peak_lr: f64,
    pub warmup_fraction: f64,
    pub decay: DecayShape,
    pub phase1_fraction: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: DEFAULT_TAU,
            negative_mode: NegativeMode::InBatch,
            negatives_per_query: DEFAULT_NEGATIVES,
            mining_strategy: MiningStrategy::Mixed,
            batch_size: 32,
            epochs: 10,
            peak_lr: 5e-3,
            warmup_fraction: DEFAULT_WARMUP_FRACTION,
            decay: DecayShape::Linear,
            phase1_fraction: DEFAULT_PHASE1_FRACTION,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if self.negative_mode == NegativeMode::Triplets && self.negatives_per_query == 0 {
            return bad("triplet mode needs at least one negative per query");
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return bad("warmup_fraction must lie in (0, 1)");
        }
        if self.batch_size == 0 || (self.negative_mode == NegativeMode::InBatch && self.batch_size < 2) {
            return bad("batch_size must be at least 2 with in-batch negatives");
        }
        if !(self.peak_lr > 0.0 && self.peak_lr.is_finite()) {
            return bad("peak_lr must be positive");
        }
        if !(0.0..=1.0).contains(&self.phase1_fraction) {
            return bad("phase1_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    /// Number of leading epochs that use the progressive phase-1 mask.
    pub fn phase1_epochs(&self) -> usize {
        ((self.phase1_fraction * self.epochs as f64).ceil() as usize).min(self.epochs)
    }
}

/// A tokenized training example. `negatives` is empty in in-batch mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainExample {
    pub query: Vec<u32>,
    pub positive: Vec<u32>,
    pub negatives: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainData {
    pub examples: Vec<TrainExample>,
    /// Inputs dropped because some text tokenized to nothing.
    pub skipped: usize,
}

impl TrainData {
    pub fn from_pairs(vocab: &WordPieceVocab, pairs: &[PairRecord]) -> Self {
        let mut data = TrainData::default();
        for p in pairs {
            let query = vocab.encode(&p.query);
            let positive = vocab.encode(&p.passage_text);
            if query.is_empty() || positive.is_empty() {
                data.skipped += 1;
                continue;
            }
            data.examples.push(TrainExample { query, positive, negatives: Vec::new() });
        }
        data
    }

    /// Resolves triplet ids against `corpus`; unknown ids are an error.
    pub fn from_triplets(
        vocab: &WordPieceVocab,
        triplets: &[TripletRecord],
        corpus: &PassageStore,
    ) -> Result<Self> {
        let mut cache: HashMap<&str, Vec<u32>> = HashMap::new();
        let mut lookup = |id: &str| -> Result<Vec<u32>> {
            if let Some(ids) = cache.get(id) {
                return Ok(ids.clone());
            }
            let p = corpus
                .get(id)
                .ok_or_else(|| Error::DanglingQrels { kind: "passage", id: id.to_string() })?;
            let ids = vocab.encode(&p.full_text());
            cache.insert(&p.id, ids.clone());
            Ok(ids)
        };
        let mut data = TrainData::default();
        for t in triplets {
            let query = vocab.encode(&t.query);
            let positive = lookup(&t.positive_id)?;
            let negatives = t
                .negative_ids
                .iter()
                .map(|id| lookup(id))
                .collect::<Result<Vec<_>>>()?;
            if query.is_empty() || positive.is_empty() || negatives.iter().any(Vec::is_empty) {
                data.skipped += 1;
                continue;
            }
            data.examples.push(TrainExample { query, positive, negatives });
        }
        Ok(data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochEval {
    pub map_at_10: f64,
    pub mrr_at_10: f64,
    pub ndcg_at_10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub phase: MaskVariant,
    pub steps: usize,
    pub loss_mean: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<EpochEval>,
    /// File name inside the checkpoint directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: AdaptationVariant,
    pub config: TrainConfig,
    pub examples: usize,
    pub skipped_examples: usize,
    pub total_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase1_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_eval: Option<EpochEval>,
    pub epochs: Vec<EpochRecord>,
}

/// Optional extras for a training run.
#[derive(Default)]
pub struct TrainHooks<'a> {
    /// Evaluated after every epoch (and once before training).
    pub eval: Option<(&'a WordPieceVocab, &'a EvalBundle)>,
    /// Receives `epoch-NNN.ckpt` after every epoch.
    pub checkpoint_dir: Option<&'a Path>,
    pub on_epoch: Option<&'a mut dyn FnMut(&EpochRecord)>,
}

fn forward_all(params: &EncoderParams, texts: &[&[u32]]) -> Result<Vec<EmbedTrace>> {
    texts.par_iter().map(|ids| embed_forward(params, ids)).collect()
}

/// Mean InfoNCE loss of a batch and its gradient with respect to every encoder
/// parameter, accumulated into `grads` (which is cleared first).
pub fn batch_loss_and_gradients(
    params: &EncoderParams,
    batch: &[&TrainExample],
    mode: NegativeMode,
    tau: f64,
    grads: &mut Gradients,
) -> Result<f64> {
    grads.clear();
    let queries: Vec<&[u32]> = batch.iter().map(|e| e.query.as_slice()).collect();
    let positives: Vec<&[u32]> = batch.iter().map(|e| e.positive.as_slice()).collect();
    let q = forward_all(params, &queries)?;
    let p = forward_all(params, &positives)?;
    let qv: Vec<Vec<f64>> = q.iter().map(|t| t.output.clone()).collect();
    let pv: Vec<Vec<f64>> = p.iter().map(|t| t.output.clone()).collect();
    let (out, n) = match mode {
        NegativeMode::InBatch => (info_nce_loss(&qv, &pv, None, tau)?, None),
        NegativeMode::Triplets => {
            let flat: Vec<&[u32]> = batch
                .iter()
                .flat_map(|e| e.negatives.iter().map(Vec::as_slice))
                .collect();
            let n = forward_all(params, &flat)?;
            let mut it = n.iter();
            let nv: Vec<Vec<Vec<f64>>> = batch
                .iter()
                .map(|e| it.by_ref().take(e.negatives.len()).map(|t| t.output.clone()).collect())
                .collect();
            (info_nce_loss(&qv, &pv, Some(&nv), tau)?, Some(n))
        }
    };
    for (t, g) in q.iter().zip(&out.grad_queries) {
        embed_backward(params, t, g, grads);
    }
    for (t, g) in p.iter().zip(&out.grad_positives) {
        embed_backward(params, t, g, grads);
    }
    if let (Some(n), Some(gn)) = (n, &out.grad_negatives) {
        for (t, g) in n.iter().zip(gn.iter().flatten()) {
            embed_backward(params, t, g, grads);
        }
    }
    Ok(out.loss)
}

fn check_variant(params: &EncoderParams, variant: AdaptationVariant) -> Result<()> {
    let patched = !params.injected_ids().is_empty();
    match (variant, patched) {
        (AdaptationVariant::Vanilla, true) => Err(Error::InvalidArgument(
            "vanilla training expects the base vocabulary (no injected tokens)".into(),
        )),
        (AdaptationVariant::Vanilla, false) | (_, true) => Ok(()),
        (v, false) => Err(Error::InvalidArgument(format!(
            "{v} training expects a patched vocabulary with injected tokens"
        ))),
    }
}

fn phase_for(variant: AdaptationVariant, epoch: usize, phase1_epochs: usize) -> MaskVariant {
    match variant {
        AdaptationVariant::Vanilla => MaskVariant::Vanilla,
        AdaptationVariant::Full => MaskVariant::Full,
        AdaptationVariant::Plug => MaskVariant::Plug,
        AdaptationVariant::Progressive if epoch < phase1_epochs => MaskVariant::ProgressivePhase1,
        AdaptationVariant::Progressive => MaskVariant::ProgressivePhase2,
    }
}

fn evaluate(params: &EncoderParams, eval: Option<(&WordPieceVocab, &EvalBundle)>) -> Result<Option<EpochEval>> {
    let Some((vocab, bundle)) = eval else { return Ok(None) };
    let m = benchmark(params, vocab, bundle, DEFAULT_K, None, None)?.metrics;
    Ok(Some(EpochEval {
        map_at_10: m.map_at_k,
        mrr_at_10: m.mrr_at_k,
        ndcg_at_10: m.ndcg_at_k,
    }))
}

fn batches_per_epoch(n: usize, config: &TrainConfig) -> usize {
    let full = n / config.batch_size;
    let rest = n % config.batch_size;
    let keep_rest = match config.negative_mode {
        NegativeMode::InBatch => rest >= 2,
        NegativeMode::Triplets => rest >= 1,
    };
    full + usize::from(keep_rest)
}

pub fn run_training(
    params: EncoderParams,
    variant: AdaptationVariant,
    data: &TrainData,
    config: &TrainConfig,
) -> Result<(EncoderParams, TrainReport)> {
    run_training_with(params, variant, data, config, TrainHooks::default())
}

/// Trains `params` in place of a copy and returns it with a per-epoch report.
///
/// Each epoch shuffles the examples with the seeded generator (stream = epoch),
/// cuts them into batches and takes one Adam step per batch under the phase's
/// freeze mask. In in-batch mode a trailing batch of one is dropped.
pub fn run_training_with(
    mut params: EncoderParams,
    variant: AdaptationVariant,
    data: &TrainData,
    config: &TrainConfig,
    mut hooks: TrainHooks<'_>,
) -> Result<(EncoderParams, TrainReport)> {
    config.validate()?;
    check_variant(&params, variant)?;
    if data.examples.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    if config.negative_mode == NegativeMode::Triplets
        && data.examples.iter().any(|e| e.negatives.is_empty())
    {
        return Err(Error::NoNegatives);
    }
    let phase1_epochs = config.phase1_epochs();
    let mut report = TrainReport {
        variant,
        config: config.clone(),
        examples: data.examples.len(),
        skipped_examples: data.skipped,
        total_steps: 0,
        phase1_epochs: (variant == AdaptationVariant::Progressive).then_some(phase1_epochs),
        initial_eval: None,
        epochs: Vec::new(),
    };
    if config.epochs == 0 {
        return Ok((params, report));
    }
    let per_epoch = batches_per_epoch(data.examples.len(), config);
    if per_epoch == 0 {
        return Err(Error::InvalidArgument(
            "dataset is too small for a single in-batch step".into(),
        ));
    }
    let total_steps = per_epoch * config.epochs;
    report.total_steps = total_steps;
    report.initial_eval = evaluate(&params, hooks.eval)?;

    if let Some(dir) = hooks.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut adam = Adam::new(&params, config.adam);
    let mut grads = Gradients::zeros(&params);
    let mut order: Vec<usize> = (0..data.examples.len()).collect();
    let mut step = 0;

    for epoch in 0..config.epochs {
        let phase = phase_for(variant, epoch, phase1_epochs);
        let mask = build_freeze_mask(&params, phase)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut lr = 0.0;
        for chunk in order.chunks(config.batch_size).take(per_epoch) {
            step += 1;
            lr = lr_at_step_with(step, total_steps, config.peak_lr, config.warmup_fraction, config.decay)?;
            let batch: Vec<&TrainExample> = chunk.iter().map(|&i| &data.examples[i]).collect();
            let diagnose = |detail: String| Error::NonFiniteLoss { epoch: epoch + 1, step, lr, detail };
            let loss = match batch_loss_and_gradients(&params, &batch, config.negative_mode, config.tau, &mut grads) {
                Ok(l) => l,
                Err(Error::DegenerateEmbedding) => {
                    return Err(diagnose(format!("degenerate embedding in forward pass, batch of {}", batch.len())))
                }
                Err(e) => return Err(e),
            };
            let grads_finite = grads.embeddings.iter().chain(&grads.projection).all(|g| g.is_finite());
            if !loss.is_finite() || !grads_finite {
                return Err(diagnose(format!(
                    "loss {loss}, finite gradients: {grads_finite}, batch of {}",
                    batch.len()
                )));
            }
            loss_sum += loss;
            adam.step(&mut params, &grads, &mask, lr);
        }

        let eval = evaluate(&params, hooks.eval)?;
        let checkpoint = match hooks.checkpoint_dir {
            Some(dir) => {
                let name = PathBuf::from(format!("epoch-{:03}.ckpt", epoch + 1));
                let path = dir.join(&name);
                let mut header = CheckpointHeader::for_params(&params, config.seed, variant);
                header.tau = Some(config.tau);
                header.epoch = Some(epoch + 1);
                save_checkpoint(&path, &params, &header)?;
                Some(name)
            }
            None => None,
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            phase,
            steps: per_epoch,
            loss_mean: loss_sum / per_epoch as f64,
            lr,
            eval,
            checkpoint,
        };
        if let Some(cb) = hooks.on_epoch.as_mut() {
            cb(&record);
        }
        report.epochs.push(record);
    }
    Ok((params, report))
}
