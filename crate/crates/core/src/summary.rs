//! Summary-type SRS sections, generated one command at a time.
//!
//! Each command in the command list selects one `SECTION:` block of the
//! summary template; the rendered prompt goes to the model in its own call
//! with no context from the other sections.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concurrent::map_ordered;
use crate::gateway::{ChatBackend, GatewayError};
use crate::prompt::{
    CommandList, PromptError, PromptTemplate, TaskKind, INPUT_TEXT, SECTION_COMMAND, SECTION_TITLE,
};
use crate::ModelSettings;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionContent {
    /// Title of the prompt section the command resolved to.
    pub title: String,
    pub command: String,
    /// The model's answer, verbatim.
    pub body: String,
    pub annotations: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("command list is empty")]
    EmptyCommandList,
    #[error("expected a summary template, got a {0} template")]
    WrongTemplate(TaskKind),
    #[error("command `{0}` does not match any section of the summary template")]
    UnresolvedCommand(String),
    #[error("command `{command}`: {source}")]
    Prompt {
        command: String,
        #[source]
        source: PromptError,
    },
    #[error("command `{command}`: {source}")]
    Gateway {
        command: String,
        #[source]
        source: GatewayError,
    },
    #[error("command `{0}`: the model returned an empty section")]
    EmptySection(String),
}

static ANNOTATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)\[\s*source\s*:\s*["“]([^"”]*)["”]\s*\]"#).unwrap()
});

/// Source citations of the form `[source: "<quote>"]`, in document order.
pub fn extract_annotations(body: &str) -> Vec<String> {
    ANNOTATION
        .captures_iter(body)
        .map(|c| c[1].trim().to_string())
        .collect()
}

/// Issues exactly one model call per command and returns the sections in
/// command order. Calls may run concurrently (up to `concurrency`); the
/// first failing command, in command order, aborts the task.
pub fn run_summary(
    source_text: &str,
    template: &PromptTemplate,
    commands: &CommandList,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
    concurrency: usize,
) -> Result<Vec<SectionContent>, SummaryError> {
    if template.task() != TaskKind::Summary {
        return Err(SummaryError::WrongTemplate(template.task()));
    }
    if commands.commands().is_empty() {
        return Err(SummaryError::EmptyCommandList);
    }

    let mut prompts = Vec::with_capacity(commands.commands().len());
    for command in commands.commands() {
        let title = template
            .resolve_section(command)
            .ok_or_else(|| SummaryError::UnresolvedCommand(command.clone()))?;
        let bindings: BTreeMap<String, String> = [
            (INPUT_TEXT, source_text),
            (SECTION_TITLE, title),
            (SECTION_COMMAND, command.as_str()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let prompt = template
            .render(&bindings, Some(title))
            .map_err(|source| SummaryError::Prompt {
                command: command.clone(),
                source,
            })?;
        prompts.push((title.to_string(), command.clone(), prompt));
    }

    let results = map_ordered(&prompts, concurrency, |_, (title, command, prompt)| {
        let response = backend
            .complete(&settings.request(prompt.clone()))
            .map_err(|source| SummaryError::Gateway {
                command: command.clone(),
                source,
            })?;
        if response.content.trim().is_empty() {
            return Err(SummaryError::EmptySection(command.clone()));
        }
        Ok(SectionContent {
            title: title.clone(),
            command: command.clone(),
            annotations: extract_annotations(&response.content),
            body: response.content,
        })
    });
    results.into_iter().collect()
}
