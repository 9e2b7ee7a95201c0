use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;

use chembed_core::corpus::{
    build_unigram_lm, filter_passages, FilterConfig, FilterReason, Passage, PassageStore,
    DEFAULT_MIN_AVG_LOGPROB, DEFAULT_MIN_WORDS,
};
use chembed_core::encoder::{
    init_encoder, load_checkpoint, save_checkpoint, sha256_hex, AdaptationVariant,
    CheckpointHeader, EncoderParams, DEFAULT_DIM,
};
use chembed_core::retrieval::{benchmark, EvalBundle, DEFAULT_K};
use chembed_core::synth::{
    generate_pairs, read_pairs_jsonl, split_train_eval, write_pairs_jsonl, write_refusals_jsonl,
    ChatTransport, ClientConfig, HttpTransport, MockTransport, PairRecord, RefusalReason,
    API_KEY_ENV, DEFAULT_CONCURRENCY, DEFAULT_ENDPOINT, MOCK_GENERATOR,
};
use chembed_core::tokenizer::{
    build_chemvocab_patch, fragmentation_report, train_wordpiece, Candidate, InjectionReport,
    WordPieceVocab, DEFAULT_MIN_FREQUENCY, DEFAULT_TARGET_SIZE, STANDARD_SPECIALS,
};
use chembed_core::train::{
    mine_negatives, read_triplets_jsonl, run_training_with, write_triplets_jsonl, DecayShape,
    EpochRecord, MiningStrategy, NegativeMode, TrainConfig, TrainData, TrainHooks,
    DEFAULT_NEGATIVES, DEFAULT_PHASE1_FRACTION, DEFAULT_TAU, DEFAULT_WARMUP_FRACTION,
};

use crate::config::Resolver;
use crate::manifest::Tracker;
use crate::UsageError;

pub struct Ctx<'a> {
    pub resolver: Resolver<'a>,
    pub tracker: Tracker,
    pub seed: u64,
}

#[derive(Subcommand)]
pub enum Command {
    /// Vocabulary training, patching and fragmentation statistics.
    #[command(subcommand)]
    Tokenizer(TokenizerCmd),
    /// Corpus quality filtering.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Synthetic query generation and train/eval splitting.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Attach pre-mined negatives to query-passage pairs.
    Mine(MineArgs),
    /// Contrastive fine-tuning of the encoder.
    Train(TrainArgs),
    /// Retrieval evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
}

#[derive(Subcommand)]
pub enum TokenizerCmd {
    Train(TokTrainArgs),
    Patch(TokPatchArgs),
    FragReport(FragArgs),
}

#[derive(Subcommand)]
pub enum CorpusCmd {
    Filter(FilterArgs),
}

#[derive(Subcommand)]
pub enum SynthCmd {
    Generate(GenerateArgs),
    Split(SplitArgs),
}

#[derive(Subcommand)]
pub enum EvalCmd {
    Run(EvalArgs),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Tokenizer(TokenizerCmd::Train(_)) => "tokenizer train",
            Command::Tokenizer(TokenizerCmd::Patch(_)) => "tokenizer patch",
            Command::Tokenizer(TokenizerCmd::FragReport(_)) => "tokenizer frag-report",
            Command::Corpus(CorpusCmd::Filter(_)) => "corpus filter",
            Command::Synth(SynthCmd::Generate(_)) => "synth generate",
            Command::Synth(SynthCmd::Split(_)) => "synth split",
            Command::Mine(_) => "mine",
            Command::Train(_) => "train",
            Command::Eval(EvalCmd::Run(_)) => "eval run",
        }
        .to_string()
    }

    pub fn execute(self, ctx: &mut Ctx<'_>) -> Result<()> {
        match self {
            Command::Tokenizer(TokenizerCmd::Train(a)) => tokenizer_train(a, ctx),
            Command::Tokenizer(TokenizerCmd::Patch(a)) => tokenizer_patch(a, ctx),
            Command::Tokenizer(TokenizerCmd::FragReport(a)) => frag_report(a, ctx),
            Command::Corpus(CorpusCmd::Filter(a)) => corpus_filter(a, ctx),
            Command::Synth(SynthCmd::Generate(a)) => synth_generate(a, ctx),
            Command::Synth(SynthCmd::Split(a)) => synth_split(a, ctx),
            Command::Mine(a) => mine(a, ctx),
            Command::Train(a) => train(a, ctx),
            Command::Eval(EvalCmd::Run(a)) => eval_run(a, ctx),
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    lock.write_all(b"\n")?;
    Ok(())
}

fn load_vocab(path: &Path, ctx: &mut Ctx<'_>) -> Result<WordPieceVocab> {
    ctx.tracker.input(path);
    Ok(WordPieceVocab::load(path)?)
}

fn load_corpus(path: &Path, ctx: &mut Ctx<'_>) -> Result<PassageStore> {
    ctx.tracker.input(path);
    Ok(PassageStore::load_jsonl(path)?)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

// ---------------------------------------------------------------- tokenizer

#[derive(Args)]
pub struct TokTrainArgs {
    /// Training text: passages JSONL (`.jsonl`) or one text per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Output vocab.txt.
    #[arg(long)]
    output: PathBuf,
    /// Ranked injection candidates (JSONL) for `tokenizer patch`.
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    min_frequency: Option<u64>,
}

fn tokenizer_train(a: TokTrainArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let target = ctx.resolver.get("vocab-size", a.vocab_size, DEFAULT_TARGET_SIZE)?;
    let min_freq = ctx.resolver.get("min-frequency", a.min_frequency, DEFAULT_MIN_FREQUENCY)?;
    ctx.tracker.input(&a.corpus);
    let texts: Vec<String> = if a.corpus.extension().is_some_and(|e| e == "jsonl") {
        PassageStore::load_jsonl(&a.corpus)?.iter().map(Passage::full_text).collect()
    } else {
        read_lines(&a.corpus)?
    };
    let trained = train_wordpiece(&texts, target, min_freq, &STANDARD_SPECIALS)?;
    trained.vocab.save(&a.output)?;
    ctx.tracker.output(&a.output);
    let candidates = trained.rank_candidates();
    if let Some(path) = &a.candidates {
        let mut w = create(path)?;
        for c in &candidates {
            serde_json::to_writer(&mut w, c)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        ctx.tracker.output(path);
    }
    print_json(&serde_json::json!({
        "vocab_size": trained.vocab.len(),
        "merges": trained.merges.len(),
        "candidates": candidates.len(),
    }))
}

#[derive(Args)]
pub struct TokPatchArgs {
    /// Base vocab.txt with `[unusedN]` slots.
    #[arg(long)]
    base: PathBuf,
    /// Candidates JSONL from `tokenizer train`.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Injection report JSON (also printed).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    max_inject: Option<usize>,
}

fn tokenizer_patch(a: TokPatchArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let max_inject = ctx.resolver.get("max-inject", a.max_inject, 900usize)?;
    let base = load_vocab(&a.base, ctx)?;
    ctx.tracker.input(&a.candidates);
    let candidates: Vec<Candidate> = read_lines(&a.candidates)?
        .iter()
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("candidates line {}", i + 1)))
        .collect::<Result<_>>()?;
    let (patched, report) = build_chemvocab_patch(&base, &candidates, max_inject)?;
    patched.save(&a.output)?;
    ctx.tracker.output(&a.output);
    if let Some(path) = &a.report {
        write_json(path, &report)?;
        ctx.tracker.output(path);
    }
    print_json(&serde_json::json!({
        "vocab_size": patched.len(),
        "injected": report.injected.len(),
        "skipped_duplicates": report.skipped_duplicates.len(),
        "remaining_unused": report.remaining_unused,
    }))
}

#[derive(Args)]
pub struct FragArgs {
    /// Vocabularies to compare (repeatable).
    #[arg(long, required = true)]
    vocab: Vec<PathBuf>,
    /// One name per line.
    #[arg(long)]
    names: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn frag_report(a: FragArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    ctx.tracker.input(&a.names);
    let names = read_lines(&a.names)?;
    let mut rows = Vec::new();
    for path in &a.vocab {
        let vocab = load_vocab(path, ctx)?;
        let stats = fragmentation_report(&vocab, &names)?;
        rows.push(serde_json::json!({ "vocab": path.display().to_string(), "stats": stats }));
    }
    let out = serde_json::Value::Array(rows);
    if let Some(path) = &a.output {
        write_json(path, &out)?;
        ctx.tracker.output(path);
    }
    print_json(&out)
}

// ------------------------------------------------------------------- corpus

#[derive(Args)]
pub struct FilterArgs {
    /// Passages JSONL.
    #[arg(long)]
    input: PathBuf,
    /// Kept passages JSONL.
    #[arg(long)]
    output: PathBuf,
    /// Per-passage decisions JSONL.
    #[arg(long)]
    decisions: Option<PathBuf>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    min_avg_logprob: Option<f64>,
    /// Section label to drop (repeatable).
    #[arg(long)]
    exclude_section: Vec<String>,
}

fn corpus_filter(a: FilterArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let config = FilterConfig {
        min_words: ctx.resolver.get("min-words", a.min_words, DEFAULT_MIN_WORDS)?,
        min_avg_logprob: ctx.resolver.get("min-avg-logprob", a.min_avg_logprob, DEFAULT_MIN_AVG_LOGPROB)?,
        excluded_sections: a.exclude_section,
    };
    ctx.resolver.note("exclude-section", config.excluded_sections.join(","));
    let store = load_corpus(&a.input, ctx)?;
    let lm = build_unigram_lm(&store)?;
    let (kept, decisions) = filter_passages(&store, &lm, &config)?;
    kept.save_jsonl(&a.output)?;
    ctx.tracker.output(&a.output);
    if let Some(path) = &a.decisions {
        let mut w = create(path)?;
        for d in &decisions {
            serde_json::to_writer(&mut w, d)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        ctx.tracker.output(path);
    }
    let count = |r: FilterReason| decisions.iter().filter(|d| d.reasons.contains(&r)).count();
    print_json(&serde_json::json!({
        "input": store.len(),
        "kept": kept.len(),
        "dropped": store.len() - kept.len(),
        "too_short": count(FilterReason::TooShort),
        "low_logprob": count(FilterReason::LowLogprob),
        "excluded_section": count(FilterReason::ExcludedSection),
    }))
}

// -------------------------------------------------------------------- synth

#[derive(Args)]
pub struct GenerateArgs {
    /// Passages JSONL.
    #[arg(long)]
    corpus: PathBuf,
    /// Pairs JSONL.
    #[arg(long)]
    output: PathBuf,
    /// Refusal log JSONL.
    #[arg(long)]
    refusals: Option<PathBuf>,
    /// Resume file; outcomes already recorded there are not requested again.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Use the offline deterministic generator instead of an HTTP endpoint.
    #[arg(long)]
    mock: bool,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    requests_per_minute: Option<f64>,
    #[arg(long)]
    concurrency: Option<usize>,
}

fn synth_generate(a: GenerateArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    ctx.resolver.note("mock", a.mock);
    let default_model = if a.mock { MOCK_GENERATOR } else { "gpt-4o-mini" };
    let mut config = ClientConfig::new(ctx.resolver.get("model", a.model, default_model.to_string())?);
    config.endpoint = ctx.resolver.get("endpoint", a.endpoint, DEFAULT_ENDPOINT.to_string())?;
    config.temperature = ctx.resolver.get_opt("temperature", a.temperature)?;
    config.max_retries = ctx.resolver.get("max-retries", a.max_retries, 3)?;
    let default_rpm = if a.mock { 1e9 } else { 60.0 };
    config.requests_per_minute = ctx.resolver.get("requests-per-minute", a.requests_per_minute, default_rpm)?;
    config.concurrency = ctx.resolver.get("concurrency", a.concurrency, DEFAULT_CONCURRENCY)?;
    config.validate().map_err(|e| usage(e.to_string()))?;

    let store = load_corpus(&a.corpus, ctx)?;
    let transport: Box<dyn ChatTransport> = if a.mock {
        Box::new(MockTransport)
    } else {
        if config.api_key.is_none() {
            anyhow::bail!("no API key: set {API_KEY_ENV} or pass --mock");
        }
        Box::new(HttpTransport::new(&config)?)
    };
    let (pairs, log) = generate_pairs(&config, &store, transport.as_ref(), a.resume.as_deref())?;
    let mut w = create(&a.output)?;
    write_pairs_jsonl(&pairs, &mut w)?;
    w.flush()?;
    ctx.tracker.output(&a.output);
    if let Some(path) = &a.refusals {
        let mut w = create(path)?;
        write_refusals_jsonl(&log, &mut w)?;
        w.flush()?;
        ctx.tracker.output(path);
    }
    print_json(&serde_json::json!({
        "passages": store.len(),
        "pairs": pairs.len(),
        "model_refused": log.count(RefusalReason::ModelRefused),
        "validation_failed": log.count(RefusalReason::ValidationFailed),
        "transport_error": log.count(RefusalReason::TransportError),
    }))
}

#[derive(Args)]
pub struct SplitArgs {
    /// Pairs JSONL from `synth generate`.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    eval_fraction: Option<f64>,
    /// Train pairs JSONL.
    #[arg(long)]
    train_output: PathBuf,
    /// Directory receiving corpus.jsonl, queries.jsonl and qrels.tsv.
    #[arg(long)]
    eval_dir: PathBuf,
}

fn synth_split(a: SplitArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let fraction = ctx.resolver.get("eval-fraction", a.eval_fraction, 0.2)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(usage("--eval-fraction must lie in (0, 1)"));
    }
    ctx.tracker.input(&a.pairs);
    let pairs = read_pairs_jsonl(&a.pairs)?;
    let (train, bundle) = split_train_eval(&pairs, fraction, ctx.seed)?;
    let mut w = create(&a.train_output)?;
    write_pairs_jsonl(&train, &mut w)?;
    w.flush()?;
    ctx.tracker.output(&a.train_output);
    bundle.save(&a.eval_dir)?;
    for name in ["corpus.jsonl", "queries.jsonl", "qrels.tsv"] {
        ctx.tracker.output(&a.eval_dir.join(name));
    }
    print_json(&serde_json::json!({
        "train_pairs": train.len(),
        "eval_queries": bundle.queries.len(),
        "eval_corpus": bundle.corpus.len(),
    }))
}

// ----------------------------------------------------------- encoder setup

#[derive(Args)]
pub struct EncoderArgs {
    /// Start from this checkpoint instead of a fresh initialization.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Injection report from `tokenizer patch`; marks the injected rows.
    #[arg(long)]
    patch_report: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
}

fn injected_ids(path: &Option<PathBuf>, ctx: &mut Ctx<'_>) -> Result<BTreeSet<u32>> {
    let Some(path) = path else { return Ok(BTreeSet::new()) };
    ctx.tracker.input(path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: InjectionReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing injection report {}", path.display()))?;
    Ok(report.injected_ids().into_iter().collect())
}

fn encoder(a: &EncoderArgs, vocab: &WordPieceVocab, ctx: &mut Ctx<'_>) -> Result<EncoderParams> {
    if let Some(path) = &a.init {
        ctx.tracker.input(path);
        let (params, _) = load_checkpoint(path)?;
        if params.vocab_size() != vocab.len() {
            anyhow::bail!(
                "checkpoint has {} rows but the vocabulary has {} tokens",
                params.vocab_size(),
                vocab.len()
            );
        }
        return Ok(params);
    }
    let dim = ctx.resolver.get("dim", a.dim, DEFAULT_DIM)?;
    let injected = injected_ids(&a.patch_report, ctx)?;
    Ok(init_encoder(vocab.len(), dim, ctx.seed, &injected)?)
}

// --------------------------------------------------------------------- mine

#[derive(Args)]
pub struct MineArgs {
    /// Train pairs JSONL.
    #[arg(long)]
    pairs: PathBuf,
    /// Negative pool; defaults to the passages of the pairs.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    vocab: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    /// hard, random or mixed.
    #[arg(long)]
    strategy: Option<String>,
    /// Negatives per query.
    #[arg(long = "H")]
    h: Option<usize>,
    /// Triplets JSONL.
    #[arg(long)]
    output: PathBuf,
    /// Also write the negative pool here (needed by `train --negatives triplets`).
    #[arg(long)]
    corpus_output: Option<PathBuf>,
}

fn pair_corpus(pairs: &[PairRecord]) -> Result<PassageStore> {
    let mut store = PassageStore::new();
    for p in pairs {
        if store.get(&p.passage_id).is_none() {
            store.push(Passage::new(p.passage_id.clone(), p.passage_text.clone()))?;
        }
    }
    Ok(store)
}

fn mine(a: MineArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let strategy: MiningStrategy = ctx
        .resolver
        .get("strategy", a.strategy, "mixed".to_string())?
        .parse()
        .map_err(|e: chembed_core::Error| usage(e.to_string()))?;
    let h = ctx.resolver.get("H", a.h, DEFAULT_NEGATIVES)?;
    let vocab = load_vocab(&a.vocab, ctx)?;
    let params = encoder(&a.encoder, &vocab, ctx)?;
    ctx.tracker.input(&a.pairs);
    let pairs = read_pairs_jsonl(&a.pairs)?;
    let corpus = match &a.corpus {
        Some(path) => load_corpus(path, ctx)?,
        None => pair_corpus(&pairs)?,
    };
    let triplets = mine_negatives(&params, &vocab, &pairs, &corpus, strategy, h, ctx.seed)?;
    let mut w = create(&a.output)?;
    write_triplets_jsonl(&triplets, &mut w)?;
    w.flush()?;
    ctx.tracker.output(&a.output);
    if let Some(path) = &a.corpus_output {
        corpus.save_jsonl(path)?;
        ctx.tracker.output(path);
    }
    print_json(&serde_json::json!({ "triplets": triplets.len(), "negatives_per_query": h }))
}

// -------------------------------------------------------------------- train

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Train pairs JSONL (in-batch negatives).
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Triplets JSONL (pre-mined negatives).
    #[arg(long)]
    triplets: Option<PathBuf>,
    /// Passages referenced by the triplets.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderArgs,
    /// vanilla, full, plug or progressive.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    tau: Option<f64>,
    /// in-batch or triplets.
    #[arg(long)]
    negatives: Option<String>,
    #[arg(long = "H")]
    h: Option<usize>,
    /// Recorded with the run; mining itself happens in `mine`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    warmup_fraction: Option<f64>,
    /// linear or constant.
    #[arg(long)]
    decay: Option<String>,
    #[arg(long)]
    phase1_fraction: Option<f64>,
    /// BEIR directory evaluated after every epoch.
    #[arg(long)]
    eval_dir: Option<PathBuf>,
    /// Receives epoch checkpoints, final.ckpt and train_report.json.
    #[arg(long)]
    output_dir: PathBuf,
}

fn load_bundle(dir: &Path, ctx: &mut Ctx<'_>) -> Result<EvalBundle> {
    let (c, q, r) = (dir.join("corpus.jsonl"), dir.join("queries.jsonl"), dir.join("qrels.tsv"));
    for p in [&c, &q, &r] {
        ctx.tracker.input(p);
    }
    Ok(EvalBundle::load(&c, &q, &r)?)
}

fn train(a: TrainArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let r = &mut ctx.resolver;
    let variant: AdaptationVariant = r
        .get("variant", a.variant, "vanilla".to_string())?
        .parse()
        .map_err(|e: chembed_core::Error| usage(e.to_string()))?;
    let negative_mode: NegativeMode = r
        .get("negatives", a.negatives, "in-batch".to_string())?
        .parse()
        .map_err(|e: chembed_core::Error| usage(e.to_string()))?;
    let decay = match r.get("decay", a.decay, "linear".to_string())?.as_str() {
        "linear" => DecayShape::Linear,
        "constant" => DecayShape::Constant,
        other => return Err(usage(format!("unknown decay {other:?}"))),
    };
    let mining_strategy: MiningStrategy = r
        .get("strategy", a.strategy, "mixed".to_string())?
        .parse()
        .map_err(|e: chembed_core::Error| usage(e.to_string()))?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        tau: r.get("tau", a.tau, DEFAULT_TAU)?,
        negative_mode,
        negatives_per_query: r.get("H", a.h, DEFAULT_NEGATIVES)?,
        mining_strategy,
        batch_size: r.get("batch-size", a.batch_size, defaults.batch_size)?,
        epochs: r.get("epochs", a.epochs, defaults.epochs)?,
        peak_lr: r.get("lr", a.lr, defaults.peak_lr)?,
        warmup_fraction: r.get("warmup-fraction", a.warmup_fraction, DEFAULT_WARMUP_FRACTION)?,
        decay,
        phase1_fraction: r.get("phase1-fraction", a.phase1_fraction, DEFAULT_PHASE1_FRACTION)?,
        seed: ctx.seed,
        adam: defaults.adam,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;

    let vocab = load_vocab(&a.vocab, ctx)?;
    let params = encoder(&a.encoder, &vocab, ctx)?;
    let data = match (negative_mode, &a.pairs, &a.triplets) {
        (NegativeMode::InBatch, Some(path), _) => {
            ctx.tracker.input(path);
            TrainData::from_pairs(&vocab, &read_pairs_jsonl(path)?)
        }
        (NegativeMode::Triplets, _, Some(path)) => {
            let corpus_path = a
                .corpus
                .as_ref()
                .ok_or_else(|| usage("--negatives triplets needs --corpus"))?;
            let corpus = load_corpus(corpus_path, ctx)?;
            ctx.tracker.input(path);
            TrainData::from_triplets(&vocab, &read_triplets_jsonl(path)?, &corpus)?
        }
        (NegativeMode::InBatch, None, _) => return Err(usage("--negatives in-batch needs --pairs")),
        (NegativeMode::Triplets, _, None) => return Err(usage("--negatives triplets needs --triplets")),
    };
    let bundle = match &a.eval_dir {
        Some(dir) => Some(load_bundle(dir, ctx)?),
        None => None,
    };

    let mut progress = |e: &EpochRecord| {
        let eval = e.eval.map(|m| format!(" ndcg@10 {:.4}", m.ndcg_at_10)).unwrap_or_default();
        eprintln!("epoch {:>3} [{}] loss {:.5} lr {:.3e}{eval}", e.epoch, e.phase, e.loss_mean, e.lr);
    };
    let hooks = TrainHooks {
        eval: bundle.as_ref().map(|b| (&vocab, b)),
        checkpoint_dir: Some(&a.output_dir),
        on_epoch: Some(&mut progress),
    };
    let (params, report) = run_training_with(params, variant, &data, &config, hooks)?;

    for e in &report.epochs {
        if let Some(name) = &e.checkpoint {
            ctx.tracker.output(&a.output_dir.join(name));
        }
    }
    let final_path = a.output_dir.join("final.ckpt");
    let mut header = CheckpointHeader::for_params(&params, ctx.seed, variant);
    header.tau = Some(config.tau);
    header.epoch = Some(config.epochs);
    save_checkpoint(&final_path, &params, &header)?;
    let report_path = a.output_dir.join("train_report.json");
    write_json(&report_path, &report)?;
    ctx.tracker.default_manifest = Some(a.output_dir.join("train.manifest.json"));
    ctx.tracker.output(&final_path);
    ctx.tracker.output(&report_path);
    let last = report.epochs.last();
    print_json(&serde_json::json!({
        "variant": variant,
        "epochs": report.epochs.len(),
        "total_steps": report.total_steps,
        "final_loss": last.map(|e| e.loss_mean),
        "final_ndcg_at_10": last.and_then(|e| e.eval).map(|m| m.ndcg_at_10),
        "checkpoint": final_path.display().to_string(),
    }))
}

// --------------------------------------------------------------------- eval

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// Also write the report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn eval_run(a: EvalArgs, ctx: &mut Ctx<'_>) -> Result<()> {
    let k = ctx.resolver.get("k", a.k, DEFAULT_K)?;
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let vocab = load_vocab(&a.vocab, ctx)?;
    ctx.tracker.input(&a.checkpoint);
    let bytes = std::fs::read(&a.checkpoint)
        .with_context(|| format!("reading {}", a.checkpoint.display()))?;
    let (params, header) = chembed_core::encoder::decode_checkpoint(&bytes)?;
    for p in [&a.corpus, &a.queries, &a.qrels] {
        ctx.tracker.input(p);
    }
    let bundle = EvalBundle::load(&a.corpus, &a.queries, &a.qrels)?;
    let report = benchmark(&params, &vocab, &bundle, k, Some(sha256_hex(&bytes)), header.tau)?;
    if let Some(path) = &a.output {
        write_json(path, &report)?;
        ctx.tracker.output(path);
    }
    print_json(&report)
}
