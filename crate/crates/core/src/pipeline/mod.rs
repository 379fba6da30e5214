//! End-to-end SRS generation: summary, extraction, then classification.

mod chunk;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunk::{extractive_digest, split_into_chunks, DEFAULT_CHUNK_BUDGET};
pub use render::{parse_json, render_json, render_markdown, DocumentJsonError, UNVERIFIED_MARKER};

use crate::classification::{classify, ClassificationError, ClassifyOptions, LabelAlphabet};
use crate::concurrent::map_ordered;
use crate::domain::{
    AssignedLabel, CustomBucket, DocumentError, Provenance, Requirement,
    RequirementLabel, SrsDocument,
};
use crate::extraction::{build_requirements, extract_items, ExtractionError, RejectedBlock};
use crate::gateway::{ChatBackend, GatewayError};
use crate::prompt::{PromptError, TemplateSet};
use crate::summary::{run_summary, SectionContent, SummaryError};
use crate::ModelSettings;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub settings: ModelSettings,
    /// Upper bound on concurrent model calls within a stage.
    pub concurrency: usize,
    /// Character budget per extraction prompt; `None` sends the whole input.
    pub chunk_budget: Option<usize>,
    pub batch_size: usize,
    pub alphabet: LabelAlphabet,
    /// Recorded verbatim in the provenance block.
    pub timestamp: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            settings: ModelSettings::default(),
            concurrency: 4,
            chunk_budget: None,
            batch_size: crate::classification::DEFAULT_BATCH_SIZE,
            alphabet: LabelAlphabet::canonical(),
            timestamp: resolve_timestamp(None, None, true).expect("epoch formats"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Summary,
    Extraction,
    Classification,
    Assembly,
}

/// What a run produced before it stopped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PartialSrs {
    pub summary_sections: Vec<SectionContent>,
    pub requirements: Vec<Requirement>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input text is empty")]
    EmptyInput,
    #[error(transparent)]
    Templates(#[from] PromptError),
    #[error("summary stage: {0}")]
    Summary(#[source] SummaryError),
    #[error("extraction stage: {source}")]
    Extraction {
        #[source]
        source: ExtractionError,
        partial: PartialSrs,
    },
    #[error("classification stage: {source}")]
    Classification {
        #[source]
        source: ClassificationError,
        partial: PartialSrs,
    },
    #[error("assembling the document: {0}")]
    Document(#[from] DocumentError),
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Input,
    Backend,
    Parse,
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Summary(_) => Some(Stage::Summary),
            PipelineError::Extraction { .. } => Some(Stage::Extraction),
            PipelineError::Classification { .. } => Some(Stage::Classification),
            PipelineError::Document(_) => Some(Stage::Assembly),
            _ => None,
        }
    }

    pub fn partial(&self) -> Option<&PartialSrs> {
        match self {
            PipelineError::Extraction { partial, .. }
            | PipelineError::Classification { partial, .. } => Some(partial),
            _ => None,
        }
    }

    pub fn kind(&self) -> FailureKind {
        match self {
            PipelineError::Summary(SummaryError::Gateway { source, .. }) => FailureKind::of_gateway(source),
            PipelineError::Summary(SummaryError::EmptySection(_)) => FailureKind::Parse,
            PipelineError::Extraction { source, .. } => match source {
                ExtractionError::Gateway(e) => FailureKind::of_gateway(e),
                ExtractionError::ParseFailure { .. } => FailureKind::Parse,
                _ => FailureKind::Input,
            },
            PipelineError::Classification { source, .. } => FailureKind::of_classification(source),
            _ => FailureKind::Input,
        }
    }
}

impl FailureKind {
    pub fn of_gateway(error: &GatewayError) -> FailureKind {
        match error {
            GatewayError::InvalidRequest(_) | GatewayError::CassetteLoad { .. } => FailureKind::Input,
            GatewayError::MalformedResponse(_) => FailureKind::Parse,
            _ => FailureKind::Backend,
        }
    }

    pub fn of_classification(error: &ClassificationError) -> FailureKind {
        match error {
            ClassificationError::Gateway(e) => FailureKind::of_gateway(e),
            ClassificationError::ParseFailure { .. } | ClassificationError::UnlabeledItems(_) => {
                FailureKind::Parse
            }
            _ => FailureKind::Input,
        }
    }

    /// 2 for usage or input problems, 3 for backend failures, 4 for answers
    /// that stayed unparsable after the corrective retry.
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Input => 2,
            FailureKind::Backend => 3,
            FailureKind::Parse => 4,
        }
    }
}

/// Provenance timestamp: an explicit value wins, then `SOURCE_DATE_EPOCH`
/// (seconds), then the Unix epoch for deterministic runs, else the clock.
pub fn resolve_timestamp(
    explicit: Option<&str>,
    source_date_epoch: Option<&str>,
    deterministic: bool,
) -> Result<String, String> {
    use chrono::{DateTime, SecondsFormat, Utc};
    let format = |t: DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Secs, true);
    if let Some(value) = explicit {
        return DateTime::parse_from_rfc3339(value)
            .map(|t| format(t.with_timezone(&Utc)))
            .map_err(|e| format!("invalid timestamp `{value}`: {e}"));
    }
    if let Some(value) = source_date_epoch.filter(|v| !v.trim().is_empty()) {
        let seconds: i64 = value
            .trim()
            .parse()
            .map_err(|_| format!("SOURCE_DATE_EPOCH `{value}` is not an integer"))?;
        return DateTime::from_timestamp(seconds, 0)
            .map(format)
            .ok_or_else(|| format!("SOURCE_DATE_EPOCH `{value}` is out of range"));
    }
    if deterministic {
        return Ok(format(DateTime::UNIX_EPOCH));
    }
    Ok(format(Utc::now()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub document: SrsDocument,
    pub sections: Vec<SectionContent>,
    pub rejected_blocks: Vec<RejectedBlock>,
    pub warnings: Vec<String>,
}

/// Runs the three stages in order. A failing stage stops the run; the error
/// names the stage and carries whatever earlier stages produced.
pub fn generate_srs(
    source_text: &str,
    templates: &TemplateSet,
    backend: &dyn ChatBackend,
    config: &RunConfig,
) -> Result<Generation, PipelineError> {
    if source_text.trim().is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    templates.validate()?;
    let settings = &config.settings;

    let summary_input = match config.chunk_budget {
        Some(budget) => extractive_digest(source_text, budget),
        None => source_text.to_string(),
    };
    let sections = run_summary(
        &summary_input,
        &templates.summary,
        &templates.commands,
        backend,
        settings,
        config.concurrency,
    )
    .map_err(PipelineError::Summary)?;
    let mut partial = PartialSrs {
        summary_sections: sections.clone(),
        requirements: Vec::new(),
    };

    let chunks = match config.chunk_budget {
        Some(budget) => split_into_chunks(source_text, budget),
        None => vec![source_text.to_string()],
    };
    let extracted = map_ordered(&chunks, config.concurrency, |_, chunk| {
        extract_items(chunk, &templates.extraction, backend, settings)
    });
    let mut items = Vec::new();
    let mut rejected_blocks = Vec::new();
    let mut warnings = Vec::new();
    for (i, result) in extracted.into_iter().enumerate() {
        let (parsed, retried) = result.map_err(|source| PipelineError::Extraction {
            source,
            partial: partial.clone(),
        })?;
        if retried {
            warnings.push(format!("extraction chunk {}: needed a corrective re-prompt", i + 1));
        }
        items.extend(parsed.items);
        rejected_blocks.extend(parsed.rejected);
    }
    let requirements = build_requirements(&items, source_text);
    partial.requirements = requirements.clone();

    let options = ClassifyOptions {
        batch_size: config.batch_size,
        concurrency: config.concurrency,
        alphabet: config.alphabet.clone(),
        strict: false,
    };
    let classified = classify(
        &requirements,
        &templates.classification,
        backend,
        settings,
        &options,
    )
    .map_err(|source| PipelineError::Classification {
        source,
        partial: partial.clone(),
    })?;
    warnings.extend(classified.warnings);
    for id in &classified.unlabeled {
        warnings.push(format!("{id}: no parsable label, left unclassified"));
    }

    let provenance = Provenance {
        model: settings.model.clone(),
        timestamp: config.timestamp.clone(),
        template_fingerprint: templates.fingerprint(),
    };
    let document = assemble(
        templates,
        &sections,
        classified.requirements,
        &config.alphabet,
        provenance,
    )?;
    Ok(Generation {
        document,
        sections,
        rejected_blocks,
        warnings,
    })
}

/// Files each classified requirement into its SRS section.
pub fn assemble(
    templates: &TemplateSet,
    sections: &[SectionContent],
    requirements: Vec<Requirement>,
    alphabet: &LabelAlphabet,
    provenance: Provenance,
) -> Result<SrsDocument, DocumentError> {
    let mut summary_sections = BTreeMap::new();
    for section in sections {
        let title = templates
            .srs
            .title_for_command(&section.command)
            .unwrap_or(&section.title);
        summary_sections.insert(title.to_string(), section.body.clone());
    }

    let mut document = SrsDocument {
        template: templates.srs.clone(),
        summary_sections,
        functional: Vec::new(),
        nonfunctional: BTreeMap::new(),
        custom: BTreeMap::new(),
        unclassified: Vec::new(),
        provenance,
    };
    for requirement in requirements {
        match requirement.label.clone() {
            Some(AssignedLabel::Canonical(RequirementLabel::Functional)) => {
                document.functional.push(requirement)
            }
            Some(AssignedLabel::Canonical(RequirementLabel::NonFunctional(subtype))) => document
                .nonfunctional
                .entry(subtype)
                .or_default()
                .push(requirement),
            Some(AssignedLabel::Custom(code)) => {
                let title = alphabet
                    .custom()
                    .iter()
                    .find(|c| c.code.trim() == code)
                    .map(|c| c.title().to_string())
                    .unwrap_or_else(|| code.clone());
                document
                    .custom
                    .entry(code)
                    .or_insert_with(|| CustomBucket {
                        title,
                        requirements: Vec::new(),
                    })
                    .requirements
                    .push(requirement)
            }
            Some(AssignedLabel::Unclassified) => document.unclassified.push(requirement),
            None => {
                return Err(DocumentError::Misfiled {
                    id: requirement.id,
                })
            }
        }
    }
    document.validate()?;
    Ok(document)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_precedence() {
        assert_eq!(
            resolve_timestamp(Some("2024-05-01T12:00:00+02:00"), Some("0"), true).unwrap(),
            "2024-05-01T10:00:00Z"
        );
        assert_eq!(
            resolve_timestamp(None, Some("86400"), false).unwrap(),
            "1970-01-02T00:00:00Z"
        );
        assert_eq!(resolve_timestamp(None, None, true).unwrap(), "1970-01-01T00:00:00Z");
        assert!(resolve_timestamp(Some("yesterday"), None, true).is_err());
        assert!(resolve_timestamp(None, Some("soon"), true).is_err());
    }
}
