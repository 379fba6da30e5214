use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatRequest, ChatResponse, GatewayError, Message, Usage};

pub const API_KEY_ENV: &str = "REQFORGE_API_KEY";
pub const API_BASE_ENV: &str = "REQFORGE_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Base URL; requests go to `<base>/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    /// Retries after the first attempt, for transient failures only.
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub initial_backoff: Duration,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: DEFAULT_API_BASE.to_string(),
            api_key: None,
            max_retries: 3,
            initial_backoff: Duration::from_secs(1),
            max_in_flight: 4,
            timeout: Duration::from_secs(300),
        }
    }
}

impl LiveConfig {
    /// Defaults with base URL and key taken from the environment.
    pub fn from_env() -> Self {
        let mut config = LiveConfig::default();
        if let Ok(base) = std::env::var(API_BASE_ENV) {
            if !base.trim().is_empty() {
                config.base_url = base.trim().to_string();
            }
        }
        config.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        config
    }
}

/// HTTP chat-completion client with bounded retries and an in-flight cap.
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
    slots: Semaphore,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Attempt {
    Done(ChatResponse),
    Retry(GatewayError),
    Fail(GatewayError),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Transport {
                status: None,
                message: e.to_string(),
            })?;
        let slots = Semaphore::new(config.max_in_flight.max(1));
        Ok(LiveBackend {
            config,
            client,
            slots,
        })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &ChatRequest) -> Attempt {
        let body = WireRequest {
            model: &request.model,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut builder = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(GatewayError::Transport {
                    status: None,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry(GatewayError::Transport {
                    status: Some(status.as_u16()),
                    message: e.to_string(),
                })
            }
        };
        if !status.is_success() {
            let err = GatewayError::Transport {
                status: Some(status.as_u16()),
                message: truncate(&text, 500),
            };
            return if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            };
        }
        match parse_wire_response(&text, &request.model) {
            Ok(r) => Attempt::Done(r),
            Err(e) => Attempt::Fail(e),
        }
    }
}

fn parse_wire_response(text: &str, requested_model: &str) -> Result<ChatResponse, GatewayError> {
    let wire: WireResponse = serde_json::from_str(text)
        .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
    let content = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::MalformedResponse("no message content in choices".into()))?;
    Ok(ChatResponse {
        content,
        model: wire.model.unwrap_or_else(|| requested_model.to_string()),
        usage: wire.usage,
    })
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((idx, _)) => format!("{}...", &s[..idx]),
        None => s.to_string(),
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let _slot = self.slots.acquire();
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Attempt::Done(response) => return Ok(response),
                Attempt::Fail(err) => return Err(err),
                Attempt::Retry(err) if attempt >= self.config.max_retries => return Err(err),
                Attempt::Retry(err) => {
                    log::warn!("chat request failed ({err}); retrying in {backoff:?}");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cond: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n),
            cond: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cond.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cond.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_chat_completion_shape() {
        let r = parse_wire_response(
            r#"{"model":"gpt-4o-2024","choices":[{"message":{"role":"assistant","content":"hi"}}],"usage":{"prompt_tokens":3,"completion_tokens":1,"total_tokens":4}}"#,
            "gpt-4o",
        )
        .unwrap();
        assert_eq!(r.content, "hi");
        assert_eq!(r.model, "gpt-4o-2024");
        assert_eq!(r.usage.unwrap().total_tokens, 4);
    }

    #[test]
    fn missing_content_is_malformed() {
        assert!(matches!(
            parse_wire_response(r#"{"choices":[]}"#, "m"),
            Err(GatewayError::MalformedResponse(_))
        ));
        assert!(matches!(
            parse_wire_response("not json", "m"),
            Err(GatewayError::MalformedResponse(_))
        ));
    }

    #[test]
    fn semaphore_caps_concurrency() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let sem = Semaphore::new(2);
        let current = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let _p = sem.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                    current.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
