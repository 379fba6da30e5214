//! FR/NFR classification of extracted requirements.
//!
//! Requirements are sent in batches as `<id>: <text>` lines; the model
//! answers `<id>: <code>` per line. Items without a usable label get one
//! corrective re-prompt, after which they are marked unclassified rather
//! than guessed.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concurrent::map_ordered;
use crate::domain::{
    first_duplicate_id, parse_label, AssignedLabel, Requirement, UNCLASSIFIED,
};
use crate::gateway::{ChatBackend, GatewayError};
use crate::prompt::{
    Block, InsertPosition, PromptError, PromptTemplate, TaskKind, EXAMPLES, NFR_SUBTYPES,
    REQUIREMENT_LIST,
};
use crate::ModelSettings;

pub const DEFAULT_BATCH_SIZE: usize = 20;

/// Block tag used for user-declared subtypes.
pub const CUSTOM_SUBTYPES: &str = "CUSTOM_SUBTYPES";

pub const CORRECTIVE_INSTRUCTION: &str = "\
IMPORTANT: some requirements above were not given a valid label. Answer again \
with exactly one line per requirement and nothing else, in the form
<requirement id>: <code>";

#[derive(Debug, Error)]
pub enum ClassificationError {
    #[error("no requirements to classify")]
    EmptyInput,
    #[error("expected a classification template, got a {0} template")]
    WrongTemplate(TaskKind),
    #[error("duplicate requirement id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("none of the expected ids received a label")]
    ParseFailure { warnings: Vec<String> },
    #[error("no parsable label for {}", .0.join(", "))]
    UnlabeledItems(Vec<String>),
    #[error("invalid custom label: {0}")]
    InvalidCustomLabel(String),
}

/// A user-declared label outside the eleven canonical NFR subtypes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomLabel {
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub definition: String,
    #[serde(default)]
    pub examples: Vec<String>,
}

impl CustomLabel {
    pub fn title(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.code)
    }
}

/// Parses the custom-label file: a JSON list of
/// `{ "code", "definition", "examples": [...] }` objects.
pub fn parse_custom_labels(json: &str) -> Result<Vec<CustomLabel>, ClassificationError> {
    let labels: Vec<CustomLabel> = serde_json::from_str(json)
        .map_err(|e| ClassificationError::InvalidCustomLabel(e.to_string()))?;
    let mut seen = HashSet::new();
    for label in &labels {
        let code = label.code.trim();
        let invalid = |why: &str| ClassificationError::InvalidCustomLabel(format!("`{code}` {why}"));
        if code.is_empty() || !code.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(invalid("must be a non-empty alphanumeric code"));
        }
        if parse_label(code).is_ok() || code.eq_ignore_ascii_case(UNCLASSIFIED) {
            return Err(invalid("collides with a canonical label"));
        }
        if !seen.insert(code.to_ascii_uppercase()) {
            return Err(invalid("is declared twice"));
        }
        if label.definition.trim().is_empty() {
            return Err(invalid("has an empty definition"));
        }
    }
    Ok(labels)
}

pub fn load_custom_labels(path: &Path) -> Result<Vec<CustomLabel>, ClassificationError> {
    let json = std::fs::read_to_string(path).map_err(|e| {
        ClassificationError::InvalidCustomLabel(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_custom_labels(&json)
}

/// The codes a run accepts from the model. Evaluation runs use
/// [`LabelAlphabet::canonical`] only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelAlphabet {
    custom: Vec<CustomLabel>,
}

impl LabelAlphabet {
    pub fn canonical() -> Self {
        LabelAlphabet::default()
    }

    pub fn with_custom(custom: Vec<CustomLabel>) -> Self {
        LabelAlphabet { custom }
    }

    pub fn custom(&self) -> &[CustomLabel] {
        &self.custom
    }

    pub fn resolve(&self, code: &str) -> Option<AssignedLabel> {
        if let Ok(label) = parse_label(code) {
            return Some(AssignedLabel::Canonical(label));
        }
        self.custom
            .iter()
            .find(|c| c.code.trim().eq_ignore_ascii_case(code.trim()))
            .map(|c| AssignedLabel::Custom(c.code.trim().to_string()))
    }

    /// Adds the custom definitions and examples to a classification
    /// template. Returns the template unchanged when there are none.
    pub fn extend_template(&self, template: &PromptTemplate) -> Result<PromptTemplate, PromptError> {
        if self.custom.is_empty() {
            return Ok(template.clone());
        }
        let mut definitions = String::from("Additional non-functional subtypes for this project:");
        for label in &self.custom {
            definitions.push_str(&format!(
                "\n{} - {}: {}",
                label.code.trim(),
                label.title(),
                label.definition.trim()
            ));
        }
        let mut extended =
            template.extend(Block::new(CUSTOM_SUBTYPES, definitions), InsertPosition::After(NFR_SUBTYPES.into()))?;
        let examples: Vec<String> = self
            .custom
            .iter()
            .flat_map(|label| {
                label.examples.iter().map(move |e| {
                    format!("Requirement: {}\nLabel: {}", one_line(e), label.code.trim())
                })
            })
            .collect();
        if !examples.is_empty() {
            extended = extended.extend(
                Block::new(EXAMPLES, examples.join("\n\n")),
                InsertPosition::After(EXAMPLES.into()),
            )?;
        }
        Ok(extended)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLabels {
    pub labels: BTreeMap<String, AssignedLabel>,
    pub warnings: Vec<String>,
}

static LABEL_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\s*(?:(?:\d+[.)]|[-*•+])\s+)?(?:\*\*|__|`)?\s*([^\s:*`]+)\s*(?:\*\*|__|`)?\s*:\s*(?:\*\*|__|`)?\s*([A-Za-z][A-Za-z0-9_]*)",
    )
    .unwrap()
});

/// Reads `<id>: <code>` lines. Unknown ids and repeated ids are skipped with
/// a warning (the first occurrence wins); unknown codes leave the id
/// unresolved.
pub fn parse_classification_output(
    raw: &str,
    expected_ids: &[String],
    alphabet: &LabelAlphabet,
) -> Result<ParsedLabels, ClassificationError> {
    let expected: BTreeSet<&str> = expected_ids.iter().map(String::as_str).collect();
    let mut parsed = ParsedLabels::default();
    for (idx, line) in raw.lines().enumerate() {
        let Some(caps) = LABEL_LINE.captures(line) else {
            continue;
        };
        let id = &caps[1];
        let code = &caps[2];
        if !expected.contains(id) {
            parsed
                .warnings
                .push(format!("line {}: ignoring unexpected id {id}", idx + 1));
            continue;
        }
        if parsed.labels.contains_key(id) {
            parsed
                .warnings
                .push(format!("line {}: ignoring repeated label for {id}", idx + 1));
            continue;
        }
        match alphabet.resolve(code) {
            Some(label) => {
                parsed.labels.insert(id.to_string(), label);
            }
            None => parsed
                .warnings
                .push(format!("line {}: unknown label `{code}` for {id}", idx + 1)),
        }
    }
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    if parsed.labels.is_empty() {
        return Err(ClassificationError::ParseFailure {
            warnings: parsed.warnings,
        });
    }
    Ok(parsed)
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub batch_size: usize,
    pub concurrency: usize,
    pub alphabet: LabelAlphabet,
    /// Fail with [`ClassificationError::UnlabeledItems`] instead of marking
    /// leftovers unclassified.
    pub strict: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            batch_size: DEFAULT_BATCH_SIZE,
            concurrency: 4,
            alphabet: LabelAlphabet::canonical(),
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationOutcome {
    /// Same order and ids as the input; only `label` differs.
    pub requirements: Vec<Requirement>,
    pub unlabeled: Vec<String>,
    pub warnings: Vec<String>,
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The `REQUIREMENT_LIST` binding for a batch.
pub fn requirement_list(requirements: &[&Requirement]) -> String {
    requirements
        .iter()
        .map(|r| format!("{}: {}", r.id, one_line(&r.text)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn classify(
    requirements: &[Requirement],
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
    options: &ClassifyOptions,
) -> Result<ClassificationOutcome, ClassificationError> {
    if requirements.is_empty() {
        return Err(ClassificationError::EmptyInput);
    }
    if template.task() != TaskKind::Classification {
        return Err(ClassificationError::WrongTemplate(template.task()));
    }
    if let Some(id) = first_duplicate_id(requirements.iter().map(|r| r.id.as_str())) {
        return Err(ClassificationError::DuplicateId(id.to_string()));
    }
    let template = options.alphabet.extend_template(template)?;

    let batches: Vec<&[Requirement]> = requirements.chunks(options.batch_size.max(1)).collect();
    let results = map_ordered(&batches, options.concurrency, |_, batch| {
        classify_batch(batch, &template, backend, settings, &options.alphabet)
    });

    let mut labels = BTreeMap::new();
    let mut warnings = Vec::new();
    for result in results {
        let parsed = result?;
        labels.extend(parsed.labels);
        warnings.extend(parsed.warnings);
    }

    let mut unlabeled = Vec::new();
    let requirements = requirements
        .iter()
        .map(|r| {
            let label = labels.remove(&r.id).unwrap_or_else(|| {
                unlabeled.push(r.id.clone());
                AssignedLabel::Unclassified
            });
            Requirement {
                label: Some(label),
                ..r.clone()
            }
        })
        .collect();

    if options.strict && !unlabeled.is_empty() {
        return Err(ClassificationError::UnlabeledItems(unlabeled));
    }
    Ok(ClassificationOutcome {
        requirements,
        unlabeled,
        warnings,
    })
}

fn classify_batch(
    batch: &[Requirement],
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
    alphabet: &LabelAlphabet,
) -> Result<ParsedLabels, ClassificationError> {
    let items: Vec<&Requirement> = batch.iter().collect();
    let mut parsed = ask(&items, template, backend, settings, alphabet, false)?;

    let missing: Vec<&Requirement> = batch
        .iter()
        .filter(|r| !parsed.labels.contains_key(&r.id))
        .collect();
    if !missing.is_empty() {
        let retry = ask(&missing, template, backend, settings, alphabet, true)?;
        parsed.labels.extend(retry.labels);
        parsed.warnings.extend(retry.warnings);
    }
    Ok(parsed)
}

fn ask(
    items: &[&Requirement],
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
    alphabet: &LabelAlphabet,
    corrective: bool,
) -> Result<ParsedLabels, ClassificationError> {
    let bindings = BTreeMap::from([(REQUIREMENT_LIST.to_string(), requirement_list(items))]);
    let mut prompt = template.render(&bindings, None)?;
    if corrective {
        prompt.push_str("\n\n");
        prompt.push_str(CORRECTIVE_INSTRUCTION);
    }
    let response = backend.complete(&settings.request(prompt))?;
    let ids: Vec<String> = items.iter().map(|r| r.id.clone()).collect();
    match parse_classification_output(&response.content, &ids, alphabet) {
        Ok(parsed) => Ok(parsed),
        Err(ClassificationError::ParseFailure { warnings }) => Ok(ParsedLabels {
            labels: BTreeMap::new(),
            warnings,
        }),
        Err(e) => Err(e),
    }
}
