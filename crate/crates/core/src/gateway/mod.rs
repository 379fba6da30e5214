//! Chat-completion gateway.
//!
//! Every task talks to the model through [`ChatBackend`]. Two real backends
//! exist: [`LiveBackend`] speaks the common JSON chat-completion protocol over
//! HTTP, and [`ReplayBackend`] answers from a recorded [`Cassette`] without
//! touching the network. [`RecordingBackend`] wraps any backend and writes
//! what it sees into a cassette file.

mod cassette;
mod live;
mod record;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cassette::{write_atomic, Cassette, CassetteEntry};
pub use live::{LiveBackend, LiveConfig, API_BASE_ENV, API_KEY_ENV, DEFAULT_API_BASE};
pub use record::{CallLog, RecordingBackend};

/// Default sampling temperature. Zero keeps runs as reproducible as the
/// model allows.
pub const DEFAULT_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ChatRequest {
    /// A single-user-message request at the default temperature.
    pub fn user(model: impl Into<String>, content: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            messages: vec![Message::user(content)],
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: None,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(GatewayError::InvalidRequest("no user message".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature must be a finite non-negative number, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 over the canonical JSON of model, messages and
    /// temperature. Keys are sorted and no insignificant whitespace is
    /// emitted, so the digest is stable across runs and platforms.
    /// `max_tokens` and credentials are not part of it.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
        });
        let bytes = serde_json::to_vec(&canonical).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("no recorded response for request {0}")]
    CassetteMiss(String),
    #[error("cannot write cassette {path}: {source}")]
    CassetteWrite {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot load cassette {path}: {message}")]
    CassetteLoad { path: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Anything that can answer a chat request. Implementations must be safe to
/// call from several threads at once.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

/// Answers strictly from a cassette. Never falls through to the network.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    cassette: Cassette,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        ReplayBackend { cassette }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GatewayError> {
        Ok(ReplayBackend::new(Cassette::load(path)?))
    }

    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let fingerprint = request.fingerprint();
        let entry = self
            .cassette
            .get(&fingerprint)
            .ok_or(GatewayError::CassetteMiss(fingerprint))?;
        Ok(ChatResponse {
            content: entry.content.clone(),
            model: entry.model.clone(),
            usage: None,
        })
    }
}
