//! Prompt-driven generation of software requirements specifications.
//!
//! The pipeline turns unstructured stakeholder text into an SRS in three
//! stages: summary sections, requirement extraction with source traces, and
//! FR/NFR classification. Every model call goes through a [`gateway`]
//! backend, so runs can be replayed from a cassette without network access.

use serde::{Deserialize, Serialize};

pub mod classification;
pub(crate) mod concurrent;
pub mod domain;
pub mod eval;
pub mod extraction;
pub mod gateway;
pub mod pipeline;
pub mod prompt;
pub mod summary;

use gateway::{ChatRequest, Message, DEFAULT_TEMPERATURE};

pub const DEFAULT_MODEL: &str = "gpt-4o";

/// Model parameters shared by every call of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            model: DEFAULT_MODEL.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: None,
        }
    }
}

impl ModelSettings {
    pub fn new(model: impl Into<String>) -> Self {
        ModelSettings {
            model: model.into(),
            ..ModelSettings::default()
        }
    }

    /// A single-message request carrying `prompt` as the user turn.
    pub fn request(&self, prompt: String) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages: vec![Message::user(prompt)],
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub struct Intro;
    #[doc = include_str!("../../../book/src/pipeline.md")]
    pub struct Pipeline;
    #[doc = include_str!("../../../book/src/templates.md")]
    pub struct Templates;
    #[doc = include_str!("../../../book/src/extraction.md")]
    pub struct Extraction;
    #[doc = include_str!("../../../book/src/classification.md")]
    pub struct Classification;
    #[doc = include_str!("../../../book/src/replay.md")]
    pub struct Replay;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
