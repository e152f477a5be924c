//! Blocking client for a chat-completion style endpoint.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_timeout_secs() -> f64 {
    60.0
}

fn default_concurrency() -> usize {
    4
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

fn default_label() -> String {
    "live".into()
}

/// Provider settings. The secret itself is never stored: `api_key_env`
/// names the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_id: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default = "default_label")]
    pub provider_label: String,
    /// Retries after the first attempt on transport errors, 429 and 5xx.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Base delay; attempt `n` waits `backoff_ms * 2^(n-1)`.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl ProviderConfig {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        ProviderConfig {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            api_key_env: None,
            timeout_secs: default_timeout_secs(),
            max_concurrency: default_concurrency(),
            provider_label: default_label(),
            max_retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            temperature: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs > 0.0) || !self.timeout_secs.is_finite() {
            return Err(Error::InvalidConfig("timeout must be > 0".into()));
        }
        if self.max_concurrency == 0 {
            return Err(Error::InvalidConfig("max_concurrency must be >= 1".into()));
        }
        if self.endpoint.trim().is_empty() || self.model_id.trim().is_empty() {
            return Err(Error::InvalidConfig(
                "endpoint and model_id are required".into(),
            ));
        }
        if self.provider_label.trim().is_empty() {
            return Err(Error::InvalidConfig(
                "provider_label must be non-empty".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ProviderConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
pub struct LiveClient {
    config: ProviderConfig,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

enum Attempt {
    Retryable(String),
    Fatal(Error),
}

impl LiveClient {
    pub fn new(config: ProviderConfig) -> Result<Self> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LiveClient { config, agent })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn attempt(&self, body: &serde_json::Value, key: Option<&str>) -> Result<String, Attempt> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        match status {
            200..=299 => {}
            429 | 500..=599 => return Err(Attempt::Retryable(format!("HTTP {status}: {text}"))),
            _ => return Err(Attempt::Fatal(Error::HttpStatus { status, body: text })),
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|_| Attempt::Fatal(Error::MalformedResponse { raw: text.clone() }))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or(Attempt::Fatal(Error::MalformedResponse { raw: text }))
    }

    /// Sends one prompt and returns the raw completion text. Transport
    /// failures are retried with exponential backoff; content problems are
    /// not.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        let key = match &self.config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| Error::MissingSecret(var.clone()))?),
            None => None,
        };
        let mut body = serde_json::json!({
            "model": self.config.model_id,
            "messages": [{ "role": "user", "content": prompt }],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = serde_json::json!(t);
        }
        let max_attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            match self.attempt(&body, key.as_deref()) {
                Ok(content) => return Ok(content),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(msg)) => {
                    log::warn!(
                        "provider {} attempt {attempt}/{max_attempts} failed: {msg}",
                        self.config.provider_label
                    );
                    last = msg;
                    if attempt < max_attempts {
                        let delay = self
                            .config
                            .backoff_ms
                            .saturating_mul(1 << (attempt - 1).min(16));
                        thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(Error::Transport {
            attempts: max_attempts,
            message: last,
        })
    }
}
