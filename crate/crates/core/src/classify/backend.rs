//! Chat-completion backends: an HTTP client for any endpoint speaking the
//! common `chat/completions` JSON shape, and an offline deterministic stub.

use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ClassifyError;

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    /// Sent as the single user message.
    pub prompt: String,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            BackendError::Malformed(_) => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;

    /// Whether requests leave the process.
    fn is_network(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff_ms: 1000,
            max_backoff_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): doubles each time.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << (attempt.saturating_sub(1)).min(20);
        Duration::from_millis(
            self.initial_backoff_ms
                .saturating_mul(factor)
                .min(self.max_backoff_ms),
        )
    }
}

pub(super) fn complete_with_retry(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
    policy: &RetryPolicy,
) -> Result<String, BackendError> {
    let mut attempt = 0;
    loop {
        match backend.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt < policy.max_retries => {
                attempt += 1;
                let delay = policy.backoff(attempt);
                debug!("backend error ({e}); retry {attempt} in {delay:?}");
                std::thread::sleep(delay);
            }
            Err(e) => {
                warn!("backend error after {attempt} retries: {e}");
                return Err(e);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo-0301".into(),
            temperature: 0.0,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.temperature != 0.0 {
            return Err(ClassifyError::InvalidConfig(format!(
                "temperature must be 0.0, got {}",
                self.temperature
            )));
        }
        if self.max_in_flight < 1 {
            return Err(ClassifyError::InvalidConfig(
                "max_in_flight must be at least 1".into(),
            ));
        }
        if self.model.trim().is_empty() {
            return Err(ClassifyError::InvalidConfig("model is empty".into()));
        }
        Ok(())
    }
}

/// Deterministic offline backend: the label is the parity of the prompt's
/// SHA-256 digest.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubBackend;

impl StubBackend {
    pub fn respond(prompt: &str) -> String {
        let digest = Sha256::digest(prompt.as_bytes());
        let tag = hex::encode(&digest[..4]);
        if digest[31] % 2 == 0 {
            format!("This article is in the conceptual category because stub digest {tag} is even.")
        } else {
            format!("This article is in the empirical category because stub digest {tag} is odd.")
        }
    }
}

impl ChatBackend for StubBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        Ok(Self::respond(&request.prompt))
    }

    fn is_network(&self) -> bool {
        false
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [WireMessage<'a>; 1],
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: Option<String>,
}

/// Blocking client for a chat-completion endpoint.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: String,
}

impl HttpBackend {
    /// Reads the API key from `config.api_key_env`; a missing variable is an
    /// error.
    pub fn from_config(config: &BackendConfig) -> Result<Self, ClassifyError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| ClassifyError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::with_key(config, api_key))
    }

    pub fn with_key(config: &BackendConfig, api_key: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: config.endpoint.clone(),
            api_key,
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let body = WireRequest {
            model: &request.model,
            temperature: request.temperature,
            messages: [WireMessage {
                role: "user",
                content: &request.prompt,
            }],
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body: text });
        }
        let parsed: WireResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Malformed("no completion text".into()))
    }
}
