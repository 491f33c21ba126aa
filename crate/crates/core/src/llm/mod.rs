//! Chat-completions client with top-k log probabilities, prompt rendering,
//! action parsing and critical-position extraction.

mod agent;
mod client;
mod parse;
mod positions;
mod prompts;

pub use agent::LlmAgent;
pub use client::LlmClient;
pub use parse::{extract_json, parse_action};
pub use positions::{extract_positions, EnvKind};
pub use prompts::{render_prompts, render_template, RenderedPrompt, FORMAT_REMINDER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("api error after {attempts} attempt(s): {message}")]
    Api { attempts: u32, message: String },
    #[error("malformed response body: {0}")]
    MalformedResponse(String),
    #[error("malformed generation: {0}")]
    MalformedGeneration(String),
    #[error("configuration error: {0}")]
    Config(String),
}

fn default_api_key_env() -> Option<String> {
    Some("OPENAI_API_KEY".to_string())
}
fn default_top_k() -> usize {
    10
}
fn default_retry_budget() -> u32 {
    2
}
fn default_timeout() -> u64 {
    60
}
fn default_concurrency() -> usize {
    8
}
fn default_backoff() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; `None` sends no
    /// authorization header.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: default_api_key_env(),
            temperature: 0.0,
            top_k: default_top_k(),
            retry_budget: default_retry_budget(),
            timeout_secs: default_timeout(),
            max_concurrency: default_concurrency(),
            retry_backoff_ms: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.endpoint.is_empty() || self.model.is_empty() {
            return Err(LlmError::Config("endpoint and model are required".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::Config(format!("temperature = {}", self.temperature)));
        }
        if self.top_k == 0 || self.max_concurrency == 0 {
            return Err(LlmError::Config("top_k and max_concurrency must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLogprob {
    pub token: String,
    pub logprob: f64,
}

/// One generated token with its top-k alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprobs {
    pub token: String,
    pub logprob: f64,
    pub top: Vec<TopLogprob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub generation: String,
    pub tokens: Vec<TokenLogprobs>,
}
