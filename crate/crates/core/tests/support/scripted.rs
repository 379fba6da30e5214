//! Hand-authored model answers for the clinic fixture, served by prompt kind.

use std::path::{Path, PathBuf};

use reqforge::gateway::{ChatBackend, ChatRequest, ChatResponse, GatewayError};

pub struct Scripted {
    dir: PathBuf,
}

const SECTIONS: [(&str, &str); 4] = [
    ("Write Introduction Section", "introduction.md"),
    ("Write Stakeholders/Users Section", "stakeholders.md"),
    ("Write Use Cases Section", "use_cases.md"),
    ("Write Glossary of Terms Section", "glossary.md"),
];

impl Scripted {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Scripted { dir: dir.into() }
    }

    pub fn clinic() -> Self {
        Scripted::new(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/clinic/responses"))
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.join(name)).expect("scripted response exists")
    }

    fn answer(&self, prompt: &str) -> Option<String> {
        if prompt.contains("classifying software requirements") {
            let answer: Vec<String> = self
                .read("classification.txt")
                .lines()
                .filter(|line| {
                    let id = line.split(':').next().unwrap_or_default();
                    prompt.lines().any(|p| p.starts_with(&format!("{id}: ")))
                })
                .map(str::to_string)
                .collect();
            return Some(answer.join("\n"));
        }
        if prompt.contains("extract the software requirements") {
            return Some(self.read("extraction.txt"));
        }
        SECTIONS
            .iter()
            .find(|(command, _)| prompt.contains(command))
            .map(|(_, file)| self.read(file))
    }
}

impl ChatBackend for Scripted {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let prompt = &request.messages.last().expect("one message").content;
        let content = self
            .answer(prompt)
            .ok_or_else(|| GatewayError::InvalidRequest("no scripted answer".into()))?;
        Ok(ChatResponse {
            content,
            model: request.model.clone(),
            usage: None,
        })
    }
}
