use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::label::{AssignedLabel, NfrSubtype, RequirementLabel};
use super::requirement::{first_duplicate_id, Requirement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SectionKind {
    /// Filled by the summary task by issuing `command`.
    Summary { command: String },
    FunctionalRequirements,
    NonFunctionalRequirements,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSection", into = "RawSection")]
pub struct SectionSpec {
    pub title: String,
    pub kind: SectionKind,
}

#[derive(Serialize, Deserialize)]
struct RawSection {
    title: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    command: Option<String>,
}

impl TryFrom<RawSection> for SectionSpec {
    type Error = String;

    fn try_from(raw: RawSection) -> Result<Self, Self::Error> {
        let kind = match raw.kind.as_str() {
            "summary" => SectionKind::Summary {
                command: raw.command.unwrap_or_default(),
            },
            "functional" => SectionKind::FunctionalRequirements,
            "nonfunctional" => SectionKind::NonFunctionalRequirements,
            other => return Err(format!("unknown section kind `{other}`")),
        };
        Ok(SectionSpec {
            title: raw.title,
            kind,
        })
    }
}

impl From<SectionSpec> for RawSection {
    fn from(spec: SectionSpec) -> Self {
        let (kind, command) = match spec.kind {
            SectionKind::Summary { command } => ("summary", Some(command)),
            SectionKind::FunctionalRequirements => ("functional", None),
            SectionKind::NonFunctionalRequirements => ("nonfunctional", None),
        };
        RawSection {
            title: spec.title,
            kind: kind.to_string(),
            command,
        }
    }
}

#[derive(Debug, Error)]
pub enum SrsTemplateError {
    #[error("cannot read SRS template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed SRS template: {0}")]
    Json(#[from] serde_json::Error),
    #[error("SRS template must contain exactly one {kind} section, found {count}")]
    RequirementSectionCount { kind: &'static str, count: usize },
    #[error("summary section `{0}` has an empty command")]
    EmptyCommand(String),
    #[error("duplicate section title `{0}`")]
    DuplicateTitle(String),
    #[error("command `{command}` of section `{title}` is not in the command list")]
    CommandNotListed { title: String, command: String },
    #[error("command `{0}` does not name a summary section of the SRS template")]
    UnmappedCommand(String),
}

/// Ordered section layout of the output document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrsTemplate {
    pub sections: Vec<SectionSpec>,
}

impl SrsTemplate {
    pub fn from_json(json: &str) -> Result<Self, SrsTemplateError> {
        let template: SrsTemplate = serde_json::from_str(json)?;
        template.validate()?;
        Ok(template)
    }

    pub fn load(path: &Path) -> Result<Self, SrsTemplateError> {
        let json = std::fs::read_to_string(path).map_err(|source| SrsTemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn validate(&self) -> Result<(), SrsTemplateError> {
        let count = |pred: fn(&SectionKind) -> bool| {
            self.sections.iter().filter(|s| pred(&s.kind)).count()
        };
        let fr = count(|k| matches!(k, SectionKind::FunctionalRequirements));
        if fr != 1 {
            return Err(SrsTemplateError::RequirementSectionCount {
                kind: "functional",
                count: fr,
            });
        }
        let nfr = count(|k| matches!(k, SectionKind::NonFunctionalRequirements));
        if nfr != 1 {
            return Err(SrsTemplateError::RequirementSectionCount {
                kind: "nonfunctional",
                count: nfr,
            });
        }
        let mut titles = HashSet::new();
        for section in &self.sections {
            if !titles.insert(section.title.as_str()) {
                return Err(SrsTemplateError::DuplicateTitle(section.title.clone()));
            }
            if let SectionKind::Summary { command } = &section.kind {
                if command.trim().is_empty() {
                    return Err(SrsTemplateError::EmptyCommand(section.title.clone()));
                }
            }
        }
        Ok(())
    }

    /// Summary sections as `(title, command)` in template order.
    pub fn summary_sections(&self) -> impl Iterator<Item = (&str, &str)> {
        self.sections.iter().filter_map(|s| match &s.kind {
            SectionKind::Summary { command } => Some((s.title.as_str(), command.as_str())),
            _ => None,
        })
    }

    /// Checks that the command list and the summary sections name each other.
    pub fn check_commands(&self, commands: &[String]) -> Result<(), SrsTemplateError> {
        for (title, command) in self.summary_sections() {
            if !commands.iter().any(|c| c.trim() == command.trim()) {
                return Err(SrsTemplateError::CommandNotListed {
                    title: title.to_string(),
                    command: command.to_string(),
                });
            }
        }
        for command in commands {
            if !self.summary_sections().any(|(_, c)| c.trim() == command.trim()) {
                return Err(SrsTemplateError::UnmappedCommand(command.clone()));
            }
        }
        Ok(())
    }

    pub fn title_for_command(&self, command: &str) -> Option<&str> {
        self.summary_sections()
            .find(|(_, c)| c.trim() == command.trim())
            .map(|(t, _)| t)
    }
}

/// A bucket of requirements carrying a user-declared (non-canonical) label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomBucket {
    pub title: String,
    pub requirements: Vec<Requirement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub timestamp: String,
    pub template_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrsDocument {
    pub template: SrsTemplate,
    pub summary_sections: BTreeMap<String, String>,
    pub functional: Vec<Requirement>,
    pub nonfunctional: BTreeMap<NfrSubtype, Vec<Requirement>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub custom: BTreeMap<String, CustomBucket>,
    /// Requirements the classifier could not label; rendered in a
    /// diagnostics appendix only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unclassified: Vec<Requirement>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("requirement {id} is filed under the wrong section")]
    Misfiled { id: String },
    #[error("duplicate requirement id {0}")]
    DuplicateId(String),
    #[error("summary section `{0}` has no generated text")]
    MissingSummary(String),
    #[error("empty requirement bucket for {0}")]
    EmptyBucket(String),
}

impl SrsDocument {
    /// Every requirement in document order: functional, canonical NFR
    /// buckets, custom buckets, then unclassified.
    pub fn requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.functional
            .iter()
            .chain(self.nonfunctional.values().flatten())
            .chain(self.custom.values().flat_map(|b| b.requirements.iter()))
            .chain(self.unclassified.iter())
    }

    pub fn validate(&self) -> Result<(), DocumentError> {
        let misfiled = |r: &Requirement| DocumentError::Misfiled { id: r.id.clone() };
        for r in &self.functional {
            if r.label != Some(AssignedLabel::Canonical(RequirementLabel::Functional)) {
                return Err(misfiled(r));
            }
        }
        for (subtype, bucket) in &self.nonfunctional {
            if bucket.is_empty() {
                return Err(DocumentError::EmptyBucket(subtype.code().to_string()));
            }
            let expected = AssignedLabel::Canonical(RequirementLabel::NonFunctional(*subtype));
            if let Some(r) = bucket.iter().find(|r| r.label.as_ref() != Some(&expected)) {
                return Err(misfiled(r));
            }
        }
        for (code, bucket) in &self.custom {
            if bucket.requirements.is_empty() {
                return Err(DocumentError::EmptyBucket(code.clone()));
            }
            let expected = AssignedLabel::Custom(code.clone());
            if let Some(r) = bucket
                .requirements
                .iter()
                .find(|r| r.label.as_ref() != Some(&expected))
            {
                return Err(misfiled(r));
            }
        }
        if let Some(r) = self
            .unclassified
            .iter()
            .find(|r| r.label != Some(AssignedLabel::Unclassified))
        {
            return Err(misfiled(r));
        }
        if let Some(id) = first_duplicate_id(self.requirements().map(|r| r.id.as_str())) {
            return Err(DocumentError::DuplicateId(id.to_string()));
        }
        for (title, _) in self.template.summary_sections() {
            if !self.summary_sections.contains_key(title) {
                return Err(DocumentError::MissingSummary(title.to_string()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template_json() -> &'static str {
        r#"{ "sections": [
            { "title": "Introduction", "kind": "summary", "command": "Write Introduction Section" },
            { "title": "Functional Requirements", "kind": "functional" },
            { "title": "Non-Functional Requirements", "kind": "nonfunctional" }
        ] }"#
    }

    #[test]
    fn parses_template_file_format() {
        let t = SrsTemplate::from_json(template_json()).unwrap();
        assert_eq!(t.sections.len(), 3);
        assert_eq!(
            t.summary_sections().collect::<Vec<_>>(),
            vec![("Introduction", "Write Introduction Section")]
        );
        let back: SrsTemplate =
            serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn requires_exactly_one_fr_and_nfr_section() {
        let json = r#"{ "sections": [ { "title": "FR", "kind": "functional" } ] }"#;
        assert!(matches!(
            SrsTemplate::from_json(json),
            Err(SrsTemplateError::RequirementSectionCount { kind: "nonfunctional", count: 0 })
        ));
        let json = r#"{ "sections": [
            { "title": "FR", "kind": "functional" },
            { "title": "FR2", "kind": "functional" },
            { "title": "NFR", "kind": "nonfunctional" } ] }"#;
        assert!(matches!(
            SrsTemplate::from_json(json),
            Err(SrsTemplateError::RequirementSectionCount { kind: "functional", count: 2 })
        ));
    }

    #[test]
    fn rejects_empty_command_and_unknown_kind() {
        let json = r#"{ "sections": [
            { "title": "Intro", "kind": "summary" },
            { "title": "FR", "kind": "functional" },
            { "title": "NFR", "kind": "nonfunctional" } ] }"#;
        assert!(matches!(
            SrsTemplate::from_json(json),
            Err(SrsTemplateError::EmptyCommand(_))
        ));
        let json = r#"{ "sections": [ { "title": "X", "kind": "appendix" } ] }"#;
        assert!(matches!(SrsTemplate::from_json(json), Err(SrsTemplateError::Json(_))));
    }

    #[test]
    fn command_list_must_match_summary_sections() {
        let t = SrsTemplate::from_json(template_json()).unwrap();
        assert!(t.check_commands(&["Write Introduction Section".into()]).is_ok());
        assert!(matches!(
            t.check_commands(&[]),
            Err(SrsTemplateError::CommandNotListed { .. })
        ));
        assert!(matches!(
            t.check_commands(&["Write Introduction Section".into(), "Write Glossary".into()]),
            Err(SrsTemplateError::UnmappedCommand(_))
        ));
    }
}
