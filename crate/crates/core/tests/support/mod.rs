#![allow(dead_code)]

pub mod http;
pub mod oracle;
pub mod scripted;

use std::path::PathBuf;

use reqforge::gateway::{ChatBackend, ChatRequest, ChatResponse, GatewayError};

/// Backend driven by a closure over the prompt text.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&str) -> Result<String, GatewayError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let content = (self.0)(&request.messages.last().expect("one message").content)?;
        Ok(ChatResponse {
            content,
            model: request.model.clone(),
            usage: None,
        })
    }
}

pub fn clinic_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/clinic")
}

pub fn clinic_input() -> String {
    std::fs::read_to_string(clinic_dir().join("input.txt")).unwrap()
}

pub fn is_classification(prompt: &str) -> bool {
    prompt.contains("classifying software requirements")
}

pub fn is_extraction(prompt: &str) -> bool {
    prompt.contains("extract the software requirements")
}

/// Ids listed in the requirement list of a classification prompt.
pub fn listed_ids(prompt: &str) -> Vec<String> {
    let list = prompt.rsplit("Requirements to classify:").next().unwrap_or(prompt);
    list.lines()
        .filter_map(|l| l.split_once(": ").map(|(id, _)| id.trim().to_string()))
        .filter(|id| id.starts_with("REQ-"))
        .collect()
}

/// The text between the triple quotes of an extraction prompt.
pub fn input_of(prompt: &str) -> &str {
    let start = prompt.find("\"\"\"\n").map_or(0, |i| i + 4);
    let end = prompt.rfind("\n\"\"\"").unwrap_or(prompt.len());
    &prompt[start..end.max(start)]
}
