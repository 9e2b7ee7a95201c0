use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::client::{ChatRequest, ChatTransport, ClientConfig, RateLimiter};
use super::prompt::{render_query_prompt, REFUSAL_SENTINEL};
use super::validate::validate_query;
use crate::corpus::{Passage, PassageStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub query: String,
    pub passage_id: String,
    pub passage_text: String,
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefusalReason {
    ModelRefused,
    ValidationFailed,
    TransportError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefusalEntry {
    pub passage_id: String,
    pub reason: RefusalReason,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefusalLog {
    pub entries: Vec<RefusalEntry>,
}

impl RefusalLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, reason: RefusalReason) -> usize {
        self.entries.iter().filter(|e| e.reason == reason).count()
    }
}

/// One line of the resume checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pair(PairRecord),
    Refusal(RefusalEntry),
}

impl Outcome {
    pub fn passage_id(&self) -> &str {
        match self {
            Outcome::Pair(p) => &p.passage_id,
            Outcome::Refusal(r) => &r.passage_id,
        }
    }
}

fn clean_response(raw: &str) -> String {
    let t = raw.trim();
    let t = t
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(t);
    t.trim().to_string()
}

fn is_refusal(text: &str) -> bool {
    text.trim_end_matches('.').eq_ignore_ascii_case(REFUSAL_SENTINEL)
}

fn process_one(
    config: &ClientConfig,
    transport: &dyn ChatTransport,
    limiter: &RateLimiter,
    passage: &Passage,
) -> Outcome {
    let refuse = |reason, detail: String| {
        Outcome::Refusal(RefusalEntry {
            passage_id: passage.id.clone(),
            reason,
            detail,
        })
    };
    if passage.text.trim().is_empty() {
        return refuse(RefusalReason::ValidationFailed, "empty passage".into());
    }
    let request = ChatRequest {
        model: config.model.clone(),
        prompt: render_query_prompt(passage),
        temperature: config.temperature,
    };
    let mut attempt = 0;
    let response = loop {
        limiter.acquire();
        match transport.complete(&request) {
            Ok(r) => break r,
            Err(e) if e.retryable && attempt < config.max_retries => {
                std::thread::sleep(config.backoff(attempt));
                attempt += 1;
            }
            Err(e) => {
                return refuse(
                    RefusalReason::TransportError,
                    format!("{} after {} attempt(s)", e.message, attempt + 1),
                )
            }
        }
    };
    let query = clean_response(&response);
    if is_refusal(&query) {
        return refuse(RefusalReason::ModelRefused, String::new());
    }
    if let Err(why) = validate_query(&query) {
        return refuse(RefusalReason::ValidationFailed, why.to_string());
    }
    Outcome::Pair(PairRecord {
        query,
        passage_id: passage.id.clone(),
        passage_text: passage.text.clone(),
        generator: config.model.clone(),
        split: None,
    })
}

/// Reads a checkpoint written by [`generate_pairs`]. A torn final line (no
/// trailing newline) from an interrupted run is ignored.
pub fn read_checkpoint(path: &Path) -> Result<Vec<Outcome>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(o) => out.push(o),
            Err(_) if !complete && i + 1 == lines.len() => break,
            Err(e) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// Generates one query per passage with `config.concurrency` workers.
///
/// Outcomes are appended to `checkpoint` as they complete; passages already
/// present there are not requested again. Results are returned in store order.
pub fn generate_pairs(
    config: &ClientConfig,
    store: &PassageStore,
    transport: &dyn ChatTransport,
    checkpoint: Option<&Path>,
) -> Result<(Vec<PairRecord>, RefusalLog)> {
    config.validate()?;
    if store.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut done: HashMap<String, Outcome> = HashMap::new();
    if let Some(path) = checkpoint {
        for o in read_checkpoint(path)? {
            if store.get(o.passage_id()).is_some() {
                done.insert(o.passage_id().to_string(), o);
            }
        }
    }
    let pending: Vec<&Passage> = store.iter().filter(|p| !done.contains_key(&p.id)).collect();

    let mut sink = match checkpoint {
        Some(path) => {
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            // Terminate a torn line so new records start cleanly.
            let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
            if len > 0 && !std::fs::read(path).map_err(|e| Error::io(path, e))?.ends_with(b"\n") {
                file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
            Some((path, file))
        }
        None => None,
    };

    let limiter = RateLimiter::new(config.requests_per_minute);
    let next = AtomicUsize::new(0);
    let workers = config.concurrency.min(pending.len()).max(1);
    let (tx, rx) = mpsc::channel::<Outcome>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, pending, limiter) = (&next, &pending, &limiter);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(passage) = pending.get(i) else { break };
                if tx.send(process_one(config, transport, limiter, passage)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for outcome in rx {
            if let Some((path, file)) = sink.as_mut() {
                let mut line = serde_json::to_string(&outcome)?;
                line.push('\n');
                file.write_all(line.as_bytes()).map_err(|e| Error::io(*path, e))?;
            }
            done.insert(outcome.passage_id().to_string(), outcome);
        }
        Ok(())
    })?;

    let mut pairs = Vec::new();
    let mut log = RefusalLog::default();
    for p in store.iter() {
        match done.remove(&p.id) {
            Some(Outcome::Pair(pair)) => pairs.push(pair),
            Some(Outcome::Refusal(r)) => log.entries.push(r),
            None => unreachable!("every passage is processed"),
        }
    }
    Ok((pairs, log))
}

pub fn write_pairs_jsonl(pairs: &[PairRecord], mut w: impl Write) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_pairs_jsonl(path: &Path) -> Result<Vec<PairRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_refusals_jsonl(log: &RefusalLog, mut w: impl Write) -> std::io::Result<()> {
    for e in &log.entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
