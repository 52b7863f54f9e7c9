//! Chat-completion backends: the scripted mock, the HTTP client, and the
//! on-disk completion cache.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend timed out")]
    Timeout,
    #[error("backend returned HTTP {status}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("mock transcript exhausted after {consumed} replies")]
    TranscriptExhausted { consumed: usize },
    #[error("mock transcript entry {index} expected the prompt to contain {expected:?}")]
    PromptMismatch { index: usize, expected: String },
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingApiKey(String),
    #[error("invalid backend config: {0}")]
    Config(String),
    #[error("transcript {path}: {message}")]
    Transcript { path: PathBuf, message: String },
    #[error("completion cache: {0}")]
    Cache(#[from] io::Error),
}

/// A chat-completion engine. Implementations are blocking.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[Message]) -> Result<String, BackendError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Mock,
}

fn default_model() -> String {
    "gpt-4".to_string()
}
fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    2
}
fn default_backoff() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_model")]
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub transcript_path: Option<PathBuf>,
    /// Extra attempts after a 429/5xx reply.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
}

impl BackendConfig {
    pub fn mock(transcript_path: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            model_name: "mock".to_string(),
            temperature: 0.0,
            timeout_secs: default_timeout(),
            api_key_env: None,
            transcript_path: Some(transcript_path.into()),
            max_retries: 0,
            retry_backoff_ms: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        match self.kind {
            BackendKind::Live => {
                if self.endpoint.as_deref().is_none_or(str::is_empty) {
                    return Err(BackendError::Config("live backend requires `endpoint`".into()));
                }
                if self.api_key_env.as_deref().is_none_or(str::is_empty) {
                    return Err(BackendError::Config("live backend requires `api_key_env`".into()));
                }
            }
            BackendKind::Mock => {
                if self.transcript_path.is_none() {
                    return Err(BackendError::Config("mock backend requires `transcript_path`".into()));
                }
            }
        }
        Ok(())
    }
}

/// One scripted reply. When `match` is set, the outgoing prompt must contain
/// it verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub match_text: Option<String>,
    pub reply: String,
}

/// Replays a transcript in order, one entry per completion.
pub struct MockBackend {
    entries: Vec<TranscriptEntry>,
    cursor: Mutex<usize>,
}

impl MockBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self {
            entries,
            cursor: Mutex::new(0),
        }
    }

    pub fn scripted<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            replies
                .into_iter()
                .map(|r| TranscriptEntry {
                    match_text: None,
                    reply: r.into(),
                })
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let err = |message: String| BackendError::Transcript {
            path: path.to_path_buf(),
            message,
        };
        let raw = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let entries: Vec<TranscriptEntry> = serde_json::from_str(&raw).map_err(|e| err(e.to_string()))?;
        Ok(Self::new(entries))
    }

    /// Number of completions served so far.
    pub fn calls(&self) -> usize {
        *self.cursor.lock().expect("mock cursor poisoned")
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.calls()
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, messages: &[Message]) -> Result<String, BackendError> {
        let mut cursor = self.cursor.lock().expect("mock cursor poisoned");
        let entry = self
            .entries
            .get(*cursor)
            .ok_or(BackendError::TranscriptExhausted { consumed: *cursor })?;
        if let Some(expected) = &entry.match_text {
            let prompt = messages
                .iter()
                .rev()
                .find(|m| m.role == Role::User)
                .map_or("", |m| m.content.as_str());
            if !prompt.contains(expected.as_str()) {
                return Err(BackendError::PromptMismatch {
                    index: *cursor,
                    expected: expected.clone(),
                });
            }
        }
        *cursor += 1;
        Ok(entry.reply.clone())
    }

    fn name(&self) -> &str {
        "mock"
    }
}

/// Chat-completion client for the common `messages`/`choices` JSON shape.
pub struct HttpBackend {
    endpoint: String,
    model_name: String,
    temperature: f64,
    api_key: String,
    max_retries: u32,
    retry_backoff: Duration,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let var = config.api_key_env.clone().unwrap_or_default();
        let api_key = std::env::var(&var).map_err(|_| BackendError::MissingApiKey(var))?;
        Ok(Self::with_key(config, api_key))
    }

    /// Builds a client with an explicit key, bypassing the environment.
    pub fn with_key(config: &BackendConfig, api_key: String) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Self {
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model_name: config.model_name.clone(),
            temperature: config.temperature,
            api_key,
            max_retries: config.max_retries,
            retry_backoff: Duration::from_millis(config.retry_backoff_ms),
            agent,
        }
    }

    fn attempt(&self, body: &Value) -> Result<String, BackendError> {
        let response = self
            .agent
            .post(&self.endpoint)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .set("Content-Type", "application/json")
            .send_string(&body.to_string());
        match response {
            Ok(resp) => {
                let text = resp.into_string().map_err(classify_io)?;
                parse_completion(&text)
            }
            Err(ureq::Error::Status(status, resp)) => Err(BackendError::Http {
                status,
                body: resp.into_string().unwrap_or_default(),
            }),
            Err(ureq::Error::Transport(t)) => Err(classify_transport(t)),
        }
    }
}

fn classify_io(e: io::Error) -> BackendError {
    match e.kind() {
        io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => BackendError::Timeout,
        _ => BackendError::Transport(e.to_string()),
    }
}

fn classify_transport(t: ureq::Transport) -> BackendError {
    let mut source = std::error::Error::source(&t);
    while let Some(err) = source {
        if let Some(io_err) = err.downcast_ref::<io::Error>() {
            if matches!(io_err.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) {
                return BackendError::Timeout;
            }
        }
        source = err.source();
    }
    let text = t.to_string();
    if text.contains("timed out") {
        BackendError::Timeout
    } else {
        BackendError::Transport(text)
    }
}

fn parse_completion(body: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::MalformedResponse("missing choices[0].message.content".to_string()))
}

fn retryable(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[Message]) -> Result<String, BackendError> {
        let body = json!({
            "model": self.model_name,
            "messages": messages,
            "temperature": self.temperature,
        });
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Err(BackendError::Http { status, .. }) if retryable(status) && attempt < self.max_retries => {
                    thread::sleep(self.retry_backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn name(&self) -> &str {
        &self.model_name
    }
}

/// Content-addressed, write-once cache in front of another backend.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
    model_name: String,
}

impl<B: ChatBackend> CachedBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>, model_name: impl Into<String>) -> Self {
        Self {
            inner,
            dir: dir.into(),
            model_name: model_name.into(),
        }
    }

    pub fn key(&self, messages: &[Message]) -> String {
        cache_key(&self.model_name, messages)
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }
}

pub fn cache_key(model_name: &str, messages: &[Message]) -> String {
    let canonical = json!({ "model": model_name, "messages": messages }).to_string();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    reply: String,
}

impl<B: ChatBackend> ChatBackend for CachedBackend<B> {
    fn complete(&self, messages: &[Message]) -> Result<String, BackendError> {
        let key = self.key(messages);
        let path = self.path_for(&key);
        if let Ok(raw) = fs::read_to_string(&path) {
            if let Ok(record) = serde_json::from_str::<CacheRecord>(&raw) {
                return Ok(record.reply);
            }
        }
        let reply = self.inner.complete(messages)?;
        fs::create_dir_all(&self.dir)?;
        let tmp = self
            .dir
            .join(format!("{key}.{}.{:?}.tmp", std::process::id(), thread::current().id()));
        fs::write(
            &tmp,
            serde_json::to_string(&CacheRecord { reply: reply.clone() }).unwrap(),
        )?;
        // hard_link refuses to replace an existing entry, which keeps the
        // cache write-once when two writers race on the same key
        match fs::hard_link(&tmp, &path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {}
            Err(e) => {
                let _ = fs::remove_file(&tmp);
                return Err(e.into());
            }
        }
        let _ = fs::remove_file(&tmp);
        Ok(reply)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
