use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{Completion, LlmConfig, LlmError, TokenLogprobs, TopLogprob};

const REQUEST_ID_HEADER: &str = "x-request-id";

/// Counting semaphore bounding in-flight requests.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Blocking client shared by all agents of a run.
pub struct LlmClient {
    config: LlmConfig,
    api_key: Option<String>,
    http: Client,
    slots: Slots,
    next_id: AtomicU64,
}

enum Attempt {
    Done(Completion),
    Retry(String),
    Fatal(LlmError),
}

impl LlmClient {
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| LlmError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let http = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            slots: Slots {
                free: Mutex::new(config.max_concurrency),
                cv: Condvar::new(),
            },
            config,
            api_key,
            http,
            next_id: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Run one completion. Transport failures, 429 and 5xx responses are
    /// retried up to the retry budget.
    pub fn complete_with_logprobs(
        &self,
        system: &str,
        user: &str,
        temperature: Option<f64>,
    ) -> Result<Completion, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": temperature.unwrap_or(self.config.temperature),
            "logprobs": true,
            "top_logprobs": self.config.top_k,
        });
        let max_attempts = self.config.retry_budget + 1;
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 && self.config.retry_backoff_ms > 0 {
                let wait = self.config.retry_backoff_ms << (attempt - 2).min(6);
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&body) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fatal(LlmError::Api { message, .. }) => {
                    return Err(LlmError::Api {
                        attempts: attempt,
                        message,
                    })
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(msg) => last = msg,
            }
        }
        Err(LlmError::Api {
            attempts: max_attempts,
            message: last,
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let id = format!(
            "aw-{}-{}",
            std::process::id(),
            self.next_id.fetch_add(1, Ordering::Relaxed)
        );
        let _slot = self.slots.acquire();
        let mut req = self
            .http
            .post(&self.config.endpoint)
            .header(REQUEST_ID_HEADER, &id)
            .json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Attempt::Retry(format!("http {status}"));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Attempt::Fatal(LlmError::Api {
                attempts: 0,
                message: format!("http {status}: {text}"),
            });
        }
        if let Some(echo) = resp.headers().get(REQUEST_ID_HEADER) {
            if echo.to_str().ok() != Some(id.as_str()) {
                return Attempt::Fatal(LlmError::MalformedResponse(format!(
                    "response correlation id {echo:?} does not match {id}"
                )));
            }
        }
        let value: Value = match resp.json() {
            Ok(v) => v,
            Err(e) => return Attempt::Retry(format!("unreadable body: {e}")),
        };
        match parse_completion(&value) {
            Ok(c) => Attempt::Done(c),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

/// Read `choices[0]` of a chat-completions response.
pub(crate) fn parse_completion(value: &Value) -> Result<Completion, LlmError> {
    let choice = value
        .pointer("/choices/0")
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0]".into()))?;
    let generation = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::MalformedResponse("missing message content".into()))?
        .to_string();
    let mut tokens = Vec::new();
    if let Some(items) = choice.pointer("/logprobs/content").and_then(Value::as_array) {
        for item in items {
            let token = item.get("token").and_then(Value::as_str);
            let logprob = item.get("logprob").and_then(Value::as_f64);
            let (Some(token), Some(logprob)) = (token, logprob) else {
                return Err(LlmError::MalformedResponse("logprob entry without token".into()));
            };
            let top = item
                .get("top_logprobs")
                .and_then(Value::as_array)
                .map(|alts| {
                    alts.iter()
                        .filter_map(|a| {
                            Some(TopLogprob {
                                token: a.get("token")?.as_str()?.to_string(),
                                logprob: a.get("logprob")?.as_f64()?,
                            })
                        })
                        .collect()
                })
                .unwrap_or_default();
            tokens.push(TokenLogprobs {
                token: token.to_string(),
                logprob,
                top,
            });
        }
    }
    Ok(Completion { generation, tokens })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_choice_zero() {
        let v = json!({"choices": [{"message": {"content": "{\"action\": 2}"},
        "logprobs": {"content": [
            {"token": "{\"", "logprob": -0.1, "top_logprobs": [{"token": "{\"", "logprob": -0.1}]},
            {"token": "2", "logprob": -0.5, "top_logprobs": [
                {"token": "2", "logprob": -0.5}, {"token": "3", "logprob": -1.2}]}
        ]}}]});
        let c = parse_completion(&v).unwrap();
        assert_eq!(c.generation, "{\"action\": 2}");
        assert_eq!(c.tokens.len(), 2);
        assert_eq!(c.tokens[1].top.len(), 2);
    }

    #[test]
    fn missing_content_is_malformed() {
        let v = json!({"choices": []});
        assert!(matches!(parse_completion(&v), Err(LlmError::MalformedResponse(_))));
    }

    #[test]
    fn missing_key_variable_is_a_config_error() {
        let mut cfg = LlmConfig::new("http://127.0.0.1:1/v1/chat/completions", "m");
        cfg.api_key_env = Some("AGENTWATCH_TEST_UNSET_VARIABLE".into());
        assert!(matches!(LlmClient::new(cfg), Err(LlmError::Config(_))));
    }
}
