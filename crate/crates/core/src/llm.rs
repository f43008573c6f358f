//! Chat-completion client with retries, an in-flight cap and a JSONL request
//! log, plus offline backends.
//!
//! The HTTP backend speaks the OpenAI-compatible `/chat/completions` shape.
//! The API key is read from the environment and never written anywhere.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::LlmError;
use crate::graph::FrameGraph;
use crate::prompts::{prompt_hash, GOA_CUE, OORA_OBSERVED_PREFIX};
use crate::text::{object_clause, parse_frame_text};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub model: String,
    /// Base URL; `/chat/completions` is appended unless already present.
    pub endpoint: String,
    pub temperature: f64,
    /// Nucleus sampling mass.
    pub top_p: f64,
    pub max_output_tokens: Option<u32>,
    pub timeout_secs: f64,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// First backoff delay; doubles on every retry.
    pub backoff_ms: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            model: "gpt-4o-mini".into(),
            endpoint: "https://api.openai.com/v1".into(),
            temperature: 0.7,
            top_p: 0.4,
            max_output_tokens: None,
            timeout_secs: 60.0,
            max_retries: 4,
            backoff_ms: 500,
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::MalformedRequest(format!("temperature {} < 0", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LlmError::MalformedRequest(format!("top_p {} outside (0, 1]", self.top_p)));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(LlmError::MalformedRequest("timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn backoff(&self, retry: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1u64 << retry.min(16)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency_ms: u64,
    pub attempts: u32,
}

pub trait CompletionBackend: Send + Sync {
    /// Short label recorded in logs and provenance.
    fn name(&self) -> String;
    fn complete(&self, prompt: &str, cfg: &DecodeConfig) -> Result<Completion, LlmError>;
}

/// OpenAI-compatible chat-completions over HTTP.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    top_p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    #[serde(default)]
    content: Option<String>,
}

enum Failure {
    Retry(LlmError),
    Fatal(LlmError),
}

impl HttpBackend {
    /// Reads the key from `cfg.api_key_env`; a missing key sends no
    /// `Authorization` header (local runtimes usually need none).
    pub fn from_env(cfg: &DecodeConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(cfg, api_key)
    }

    pub fn new(cfg: &DecodeConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport { message: e.to_string(), attempts: 0 })?;
        Ok(HttpBackend { client, api_key })
    }

    fn attempt(&self, prompt: &str, cfg: &DecodeConfig, attempts: u32) -> Result<(String, Option<Usage>), Failure> {
        let body = ChatRequest {
            model: &cfg.model,
            messages: [ChatMessage { role: "user", content: prompt }],
            temperature: cfg.temperature,
            top_p: cfg.top_p,
            max_tokens: cfg.max_output_tokens,
        };
        let mut req = self.client.post(cfg.url()).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Err(Failure::Retry(LlmError::Timeout { attempts })),
            Err(e) => {
                return Err(Failure::Retry(LlmError::Transport {
                    message: e.to_string(),
                    attempts,
                }))
            }
        };
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(Failure::Fatal(LlmError::Auth { status })),
            429 => return Err(Failure::Retry(LlmError::RateLimited { attempts })),
            408 => return Err(Failure::Retry(LlmError::Timeout { attempts })),
            500..=599 => return Err(Failure::Retry(LlmError::Server { status, attempts })),
            _ => {
                let text = resp.text().unwrap_or_default();
                return Err(Failure::Fatal(LlmError::MalformedRequest(format!(
                    "HTTP {status}: {}",
                    text.chars().take(300).collect::<String>()
                ))));
            }
        }
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                Failure::Retry(LlmError::Timeout { attempts })
            } else {
                Failure::Retry(LlmError::Transport { message: e.to_string(), attempts })
            }
        })?;
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| Failure::Fatal(LlmError::Decode(e.to_string())))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Failure::Fatal(LlmError::Decode("response has no message content".into())))?;
        Ok((content, parsed.usage))
    }
}

impl CompletionBackend for HttpBackend {
    fn name(&self) -> String {
        "http".into()
    }

    fn complete(&self, prompt: &str, cfg: &DecodeConfig) -> Result<Completion, LlmError> {
        if prompt.trim().is_empty() {
            return Err(LlmError::MalformedRequest("empty prompt".into()));
        }
        cfg.validate()?;
        let start = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(prompt, cfg, attempts) {
                Ok((text, usage)) => {
                    return Ok(Completion {
                        text,
                        usage,
                        latency_ms: start.elapsed().as_millis() as u64,
                        attempts,
                    })
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(e)) => {
                    if attempts > cfg.max_retries {
                        return Err(e);
                    }
                    let wait = cfg.backoff(attempts - 1);
                    log::warn!("attempt {attempts} failed ({e}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
            }
        }
    }
}

/// Offline stub that forecasts "nothing changes".
///
/// For a GOA prompt it lists the objects of the last observed frame for every
/// requested frame; for an OORA prompt it repeats the object's last observed
/// relations.
pub struct EchoLastFrame {
    vocab: Vocabulary,
}

impl EchoLastFrame {
    pub fn new(vocab: Vocabulary) -> Self {
        EchoLastFrame { vocab }
    }

    fn last_block(observed: &str, vocab: &Vocabulary) -> Result<FrameGraph, LlmError> {
        let segs = parse_frame_text(observed, vocab).map_err(|e| LlmError::Mock(format!("observed block: {e}")))?;
        segs.last()
            .map(|s| s.graph())
            .ok_or_else(|| LlmError::Mock("prompt has no observed frames".into()))
    }

    fn numbers(s: &str) -> Vec<u32> {
        s.split(|c: char| !c.is_ascii_digit())
            .filter(|t| !t.is_empty())
            .filter_map(|t| t.parse().ok())
            .collect()
    }

    fn respond(&self, prompt: &str) -> Result<String, LlmError> {
        let last_line = prompt.lines().last().unwrap_or_default();
        if let Some(start) = prompt.find(OORA_OBSERVED_PREFIX) {
            let rest = &prompt[start + OORA_OBSERVED_PREFIX.len()..];
            let (object, rest) = rest
                .split_once("]:\n")
                .ok_or_else(|| LlmError::Mock("unterminated object name".into()))?;
            let block = rest.split("\n\n").next().unwrap_or_default();
            let last = Self::last_block(block, &self.vocab)?;
            let state = last
                .object(object)
                .ok_or_else(|| LlmError::Mock(format!("`{object}` missing from its own segment")))?;
            let frames_part = last_line
                .strip_prefix("Future frames ")
                .and_then(|s| s.split(" for object").next())
                .ok_or_else(|| LlmError::Mock("missing OORA cue".into()))?;
            let lines: Vec<String> = Self::numbers(frames_part)
                .into_iter()
                .map(|f| format!("Frame {f}: {}", object_clause(state)))
                .collect();
            Ok(lines.join("\n"))
        } else if let Some(cue) = last_line.strip_prefix(GOA_CUE) {
            let start = prompt
                .find("Observed:\n\n")
                .ok_or_else(|| LlmError::Mock("missing observed block".into()))?;
            let block = prompt[start + "Observed:\n\n".len()..].split("\n\n").next().unwrap_or_default();
            let last = Self::last_block(block, &self.vocab)?;
            let names: Vec<&str> = last.object_names().collect();
            let lines: Vec<String> = Self::numbers(cue)
                .into_iter()
                .map(|f| format!("Frame {f}: {}", names.join(", ")))
                .collect();
            Ok(lines.join("\n"))
        } else {
            Err(LlmError::Mock("prompt is neither GOA nor OORA".into()))
        }
    }
}

impl CompletionBackend for EchoLastFrame {
    fn name(&self) -> String {
        "echo-last-frame".into()
    }

    fn complete(&self, prompt: &str, _cfg: &DecodeConfig) -> Result<Completion, LlmError> {
        if prompt.trim().is_empty() {
            return Err(LlmError::MalformedRequest("empty prompt".into()));
        }
        Ok(Completion {
            text: self.respond(prompt)?,
            usage: None,
            latency_ms: 0,
            attempts: 1,
        })
    }
}

/// Canned responses keyed by the SHA-256 of the prompt text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureBackend {
    pub label: String,
    pub responses: HashMap<String, String>,
}

impl FixtureBackend {
    pub fn new(label: impl Into<String>) -> Self {
        FixtureBackend {
            label: label.into(),
            responses: HashMap::new(),
        }
    }

    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.responses.insert(prompt_hash(prompt), response.into());
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl CompletionBackend for FixtureBackend {
    fn name(&self) -> String {
        format!("fixture:{}", self.label)
    }

    fn complete(&self, prompt: &str, _cfg: &DecodeConfig) -> Result<Completion, LlmError> {
        if prompt.trim().is_empty() {
            return Err(LlmError::MalformedRequest("empty prompt".into()));
        }
        let hash = prompt_hash(prompt);
        let text = self
            .responses
            .get(&hash)
            .cloned()
            .ok_or_else(|| LlmError::Mock(format!("no fixture response for prompt {hash}")))?;
        Ok(Completion {
            text,
            usage: None,
            latency_ms: 0,
            attempts: 1,
        })
    }
}

/// One line of the request log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub timestamp_ms: u128,
    pub backend: String,
    pub model: String,
    pub endpoint: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: Option<u32>,
    pub prompt_hash: String,
    pub prompt_chars: usize,
    pub ok: bool,
    pub attempts: u32,
    pub latency_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl Gate {
    fn enter(&self) {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.cap {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
    }

    fn leave(&self) {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.freed.notify_one();
    }
}

/// Shares one backend across threads with at most `cap` requests in flight.
#[derive(Clone)]
pub struct Client {
    backend: Arc<dyn CompletionBackend>,
    config: DecodeConfig,
    gate: Arc<Gate>,
    log: Option<Arc<Mutex<Box<dyn Write + Send>>>>,
    stats: Arc<Mutex<ClientStats>>,
}

/// Request outcomes seen by a [`Client`] and its clones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClientStats {
    pub succeeded: usize,
    pub failed: usize,
    pub last_error: Option<LlmError>,
}

impl Client {
    pub fn new(backend: Arc<dyn CompletionBackend>, config: DecodeConfig, max_in_flight: usize) -> Self {
        Client {
            backend,
            config,
            gate: Arc::new(Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                cap: max_in_flight.max(1),
            }),
            log: None,
            stats: Arc::default(),
        }
    }

    pub fn stats(&self) -> ClientStats {
        self.stats.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn with_log(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.log = Some(Arc::new(Mutex::new(sink)));
        self
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.config
    }

    pub fn backend_name(&self) -> String {
        self.backend.name()
    }

    pub fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        self.gate.enter();
        let start = Instant::now();
        let result = self.backend.complete(prompt, &self.config);
        self.gate.leave();
        let latency = start.elapsed().as_millis() as u64;
        {
            let mut stats = self.stats.lock().unwrap_or_else(|e| e.into_inner());
            match &result {
                Ok(_) => stats.succeeded += 1,
                Err(e) => {
                    stats.failed += 1;
                    stats.last_error = Some(e.clone());
                }
            }
        }
        if let Some(log) = &self.log {
            let entry = RequestLogEntry {
                timestamp_ms: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
                backend: self.backend.name(),
                model: self.config.model.clone(),
                endpoint: self.config.endpoint.clone(),
                temperature: self.config.temperature,
                top_p: self.config.top_p,
                max_output_tokens: self.config.max_output_tokens,
                prompt_hash: prompt_hash(prompt),
                prompt_chars: prompt.chars().count(),
                ok: result.is_ok(),
                attempts: result.as_ref().map(|c| c.attempts).unwrap_or(0),
                latency_ms: result.as_ref().map(|c| c.latency_ms.max(latency)).unwrap_or(latency),
                usage: result.as_ref().ok().and_then(|c| c.usage.clone()),
                response_hash: result.as_ref().ok().map(|c| prompt_hash(&c.text)),
                error: result.as_ref().err().map(|e| e.to_string()),
            };
            if let Ok(line) = serde_json::to_string(&entry) {
                let mut sink = log.lock().unwrap_or_else(|e| e.into_inner());
                let _ = writeln!(sink, "{line}");
                let _ = sink.flush();
            }
        }
        result
    }
}
