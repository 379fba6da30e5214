//! Requirement extraction: one model call, a tolerant parser for the
//! `REQUIREMENT:` / `SOURCE:` / `REASON:` answer grammar, and verification
//! of each claimed source quote against the input text.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{requirement_id, validate_pattern, Requirement, SourceTrace};
use crate::gateway::{ChatBackend, GatewayError};
use crate::prompt::{PromptError, PromptTemplate, TaskKind, INPUT_TEXT};
use crate::ModelSettings;

/// Appended to the prompt when the first answer could not be parsed.
pub const CORRECTIVE_INSTRUCTION: &str = "\
IMPORTANT: your previous answer could not be parsed. Answer again using only \
blocks of exactly this form, one block per requirement, separated by blank lines, \
with no other text:
REQUIREMENT: <the requirement sentence>
SOURCE: \"<verbatim quote from the text>\"
REASON: <why this passage expresses a requirement>";

/// One parsed answer block, before ids and verification are attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedItem {
    pub text: String,
    pub quote: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedBlock {
    /// 1-based line in the raw answer where the block starts.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedExtraction {
    pub items: Vec<ExtractedItem>,
    pub rejected: Vec<RejectedBlock>,
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("source text is empty")]
    EmptySource,
    #[error("expected an extraction template, got a {0} template")]
    WrongTemplate(TaskKind),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no valid requirement blocks in the model answer ({} rejected)", rejected.len())]
    ParseFailure { rejected: Vec<RejectedBlock> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub requirements: Vec<Requirement>,
    pub rejected: Vec<RejectedBlock>,
    /// Whether the corrective re-prompt was needed.
    pub retried: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Requirement,
    Source,
    Reason,
}

static FIELD_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^\s*(?:(?:\d+[.)]|[-*•+]|#{1,6})\s*)*(?:\*\*|__)?\s*(requirement|source|reason)(?:\s*#?\s*\d+)?\s*(?:\*\*|__)?\s*:\s*(?:\*\*|__)?\s*(.*?)\s*$",
    )
    .unwrap()
});

struct OpenBlock {
    line: usize,
    text: String,
    quote: Option<String>,
    rationale: Option<String>,
}

impl OpenBlock {
    fn slot(&mut self, field: Field) -> &mut Option<String> {
        match field {
            Field::Source => &mut self.quote,
            _ => &mut self.rationale,
        }
    }

    fn continue_field(&mut self, field: Field, line: &str) {
        let target = match field {
            Field::Requirement => &mut self.text,
            other => match self.slot(other) {
                Some(value) => value,
                None => return,
            },
        };
        if !target.is_empty() {
            target.push(' ');
        }
        target.push_str(line.trim());
    }
}

/// Parses the answer grammar. Leading numbering, bullets, markdown bold and
/// surrounding prose are tolerated, and a field may wrap onto following
/// lines up to the next blank line. Blocks missing a SOURCE or REASON are
/// rejected individually; zero accepted blocks is a failure.
pub fn parse_extraction_output(raw: &str) -> Result<ParsedExtraction, ExtractionError> {
    let mut parsed = ParsedExtraction::default();
    let mut open: Option<OpenBlock> = None;
    let mut wrapping: Option<Field> = None;

    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        let Some(caps) = FIELD_LINE.captures(line) else {
            match (wrapping, open.as_mut()) {
                (Some(field), Some(block)) if !line.trim().is_empty() => {
                    block.continue_field(field, line)
                }
                _ => wrapping = None,
            }
            continue;
        };
        let field = match caps[1].to_ascii_lowercase().as_str() {
            "requirement" => Field::Requirement,
            "source" => Field::Source,
            _ => Field::Reason,
        };
        let value = caps.get(2).map_or("", |m| m.as_str()).to_string();
        wrapping = None;
        match field {
            Field::Requirement => {
                if let Some(block) = open.take() {
                    finish(block, &mut parsed);
                }
                open = Some(OpenBlock {
                    line: line_no,
                    text: value,
                    quote: None,
                    rationale: None,
                });
                wrapping = Some(field);
            }
            Field::Source | Field::Reason => {
                let Some(block) = open.as_mut() else {
                    parsed.rejected.push(RejectedBlock {
                        line: line_no,
                        reason: "SOURCE or REASON outside a requirement block".into(),
                    });
                    continue;
                };
                let slot = block.slot(field);
                if slot.is_none() {
                    *slot = Some(value);
                    wrapping = Some(field);
                } else {
                    log::warn!("line {line_no}: repeated field ignored");
                }
            }
        }
    }
    if let Some(block) = open.take() {
        finish(block, &mut parsed);
    }

    if parsed.items.is_empty() {
        return Err(ExtractionError::ParseFailure {
            rejected: parsed.rejected,
        });
    }
    Ok(parsed)
}

fn finish(block: OpenBlock, parsed: &mut ParsedExtraction) {
    let quote = block
        .quote
        .as_deref()
        .map(strip_quotes)
        .filter(|q| !q.is_empty());
    let rationale = block.rationale.as_deref().map(str::trim).filter(|r| !r.is_empty());
    let text = block.text.trim();
    let mut missing = Vec::new();
    if text.is_empty() {
        missing.push("REQUIREMENT text");
    }
    if quote.is_none() {
        missing.push("SOURCE");
    }
    if rationale.is_none() {
        missing.push("REASON");
    }
    match (missing.is_empty(), quote, rationale) {
        (true, Some(quote), Some(rationale)) => parsed.items.push(ExtractedItem {
            text: text.to_string(),
            quote: quote.to_string(),
            rationale: rationale.to_string(),
        }),
        _ => parsed.rejected.push(RejectedBlock {
            line: block.line,
            reason: format!("missing {}", missing.join(" and ")),
        }),
    }
}

fn strip_quotes(value: &str) -> &str {
    let v = value.trim();
    let open = v.starts_with(['"', '“', '\'']);
    let close = v.ends_with(['"', '”', '\'']);
    if open && close && v.chars().count() >= 2 {
        let mut chars = v.chars();
        chars.next();
        chars.next_back();
        chars.as_str().trim()
    } else {
        v
    }
}

/// Lowercase, drop straight and curly quote characters, collapse runs of
/// whitespace to one space.
pub fn normalize(text: &str) -> String {
    let stripped: String = text
        .chars()
        .filter(|c| !matches!(c, '"' | '\'' | '“' | '”' | '‘' | '’' | '„' | '«' | '»'))
        .collect();
    stripped
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// True iff the normalized quote is a non-empty contiguous substring of the
/// normalized source.
pub fn verify_trace(quote: &str, source_text: &str) -> bool {
    let quote = normalize(quote);
    !quote.is_empty() && normalize(source_text).contains(&quote)
}

/// Turns parsed items into requirements, numbering from `REQ-1` and
/// checking pattern conformance and trace against `source_text`.
pub fn build_requirements(items: &[ExtractedItem], source_text: &str) -> Vec<Requirement> {
    let normalized_source = normalize(source_text);
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let quote = normalize(&item.quote);
            Requirement {
                id: requirement_id(i),
                text: item.text.trim().to_string(),
                trace: SourceTrace {
                    quote: item.quote.clone(),
                    rationale: item.rationale.clone(),
                    verified: !quote.is_empty() && normalized_source.contains(&quote),
                },
                label: None,
                pattern_ok: validate_pattern(&item.text).matched,
            }
        })
        .collect()
}

/// Prompts once, re-prompts once with [`CORRECTIVE_INSTRUCTION`] if the
/// answer does not parse, and returns the parsed items.
pub fn extract_items(
    source_text: &str,
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
) -> Result<(ParsedExtraction, bool), ExtractionError> {
    if source_text.trim().is_empty() {
        return Err(ExtractionError::EmptySource);
    }
    if template.task() != TaskKind::Extraction {
        return Err(ExtractionError::WrongTemplate(template.task()));
    }
    let bindings = BTreeMap::from([(INPUT_TEXT.to_string(), source_text.to_string())]);
    let prompt = template.render(&bindings, None)?;

    let first = backend.complete(&settings.request(prompt.clone()))?;
    match parse_extraction_output(&first.content) {
        Ok(parsed) => Ok((parsed, false)),
        Err(ExtractionError::ParseFailure { rejected }) => {
            log::warn!(
                "extraction answer did not parse ({} blocks rejected); re-prompting",
                rejected.len()
            );
            let retry_prompt = format!("{prompt}\n\n{CORRECTIVE_INSTRUCTION}");
            let second = backend.complete(&settings.request(retry_prompt))?;
            parse_extraction_output(&second.content).map(|parsed| (parsed, true))
        }
        Err(other) => Err(other),
    }
}

/// Full extraction task over one piece of text.
pub fn run_extraction(
    source_text: &str,
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
) -> Result<ExtractionOutcome, ExtractionError> {
    let (parsed, retried) = extract_items(source_text, template, backend, settings)?;
    Ok(ExtractionOutcome {
        requirements: build_requirements(&parsed.items, source_text),
        rejected: parsed.rejected,
        retried,
    })
}
