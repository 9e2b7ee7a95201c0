use std::fmt;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "CHEMBED_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_CONCURRENCY: usize = 4;

/// A secret that never shows up in `Debug` output.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        ApiKey(key.into())
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()).map(ApiKey)
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: Option<f64>,
    pub max_retries: u32,
    pub requests_per_minute: f64,
    pub api_key: Option<ApiKey>,
    pub concurrency: usize,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl ClientConfig {
    /// Defaults with the API key read from `CHEMBED_API_KEY`.
    pub fn new(model: impl Into<String>) -> Self {
        ClientConfig {
            endpoint: DEFAULT_ENDPOINT.into(),
            model: model.into(),
            temperature: None,
            max_retries: 3,
            requests_per_minute: 60.0,
            api_key: ApiKey::from_env(),
            concurrency: DEFAULT_CONCURRENCY,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
            timeout: Duration::from_secs(60),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.requests_per_minute > 0.0 && self.requests_per_minute.is_finite()) {
            return Err(Error::InvalidArgument("requests_per_minute must be positive".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::InvalidArgument("concurrency must be at least 1".into()));
        }
        if self.model.is_empty() {
            return Err(Error::InvalidArgument("model must be set".into()));
        }
        Ok(())
    }

    /// Delay before retry number `attempt` (0-based): exponential, capped.
    pub fn backoff(&self, attempt: u32) -> Duration {
        self.initial_backoff
            .saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX))
            .min(self.max_backoff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
    pub retryable: bool,
}

impl TransportError {
    pub fn retryable(message: impl Into<String>) -> Self {
        TransportError { message: message.into(), retryable: true }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        TransportError { message: message.into(), retryable: false }
    }
}

impl fmt::Display for TransportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Sends one chat request and returns the assistant text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, TransportError>;
}

impl<F> ChatTransport for F
where
    F: Fn(&ChatRequest) -> std::result::Result<String, TransportError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, TransportError> {
        self(request)
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpTransport {
    endpoint: String,
    api_key: Option<ApiKey>,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: &ClientConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpTransport {
            endpoint: config.endpoint.clone(),
            api_key: config.api_key.clone(),
            client,
        })
    }
}

pub(crate) fn request_body(request: &ChatRequest) -> Value {
    let mut body = json!({
        "model": request.model,
        "messages": [{"role": "user", "content": request.prompt}],
    });
    if let Some(t) = request.temperature {
        body["temperature"] = json!(t);
    }
    body
}

pub(crate) fn parse_completion(body: &Value) -> std::result::Result<String, TransportError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| TransportError::fatal("response has no choices[0].message.content"))
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> std::result::Result<String, TransportError> {
        let mut builder = self.client.post(&self.endpoint).json(&request_body(request));
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key.expose());
        }
        let response = builder
            .send()
            .map_err(|e| TransportError::retryable(format!("request failed: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            let msg = format!("HTTP {}", status.as_u16());
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                TransportError::retryable(msg)
            } else {
                TransportError::fatal(msg)
            });
        }
        let body: Value = response
            .json()
            .map_err(|e| TransportError::fatal(format!("invalid JSON body: {e}")))?;
        parse_completion(&body)
    }
}

/// Token bucket with a burst of one: successive acquisitions are spaced at
/// least `60 / requests_per_minute` seconds apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_free: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_minute: f64) -> Self {
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / requests_per_minute),
            next_free: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_free.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}
