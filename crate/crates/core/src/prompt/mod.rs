//! Prompt templates, the summary command list, and the shipped defaults.
//!
//! Template files are plain UTF-8 text. A line `=== TAG ===` opens a block
//! and every following line up to the next header belongs to its body.
//! Summary sections use `SECTION:<title>` tags. Placeholders are written
//! `{{NAME}}` and must be one of [`KNOWN_PLACEHOLDERS`].

mod template;

use std::path::Path;

use thiserror::Error;

pub use template::{
    load_template, load_template_as, Block, FewShotExample, InsertPosition, PromptTemplate,
    TaskKind, EXAMPLES, FR_NFR_DEFINITIONS, INPUT_TEXT, KNOWN_PLACEHOLDERS, NFR_SUBTYPES,
    REQUIREMENT_DEFINITION, REQUIREMENT_LIST, REQUIREMENT_PATTERN, ROLE, SECTION_COMMAND,
    SECTION_PREFIX, SECTION_TITLE, TASK, TRACE_TO_SOURCE,
};

use crate::domain::{SrsTemplate, SrsTemplateError};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("template is missing the {0} block")]
    MissingBlock(String),
    #[error("unknown placeholder {{{{{0}}}}}")]
    UnknownPlaceholder(String),
    #[error("no binding for placeholder {{{{{0}}}}}")]
    MissingBinding(String),
    #[error("section block {0} already exists")]
    DuplicateSectionTag(String),
    #[error("malformed block tag `{0}`")]
    InvalidTag(String),
    #[error("body of block {0} contains a block header line")]
    InvalidBody(String),
    #[error("invalid insert position: {0}")]
    InvalidPosition(String),
    #[error("summary templates render one section at a time; no section selected")]
    SelectorRequired,
    #[error("template has no section named `{0}`")]
    UnknownSection(String),
    #[error("{0} templates do not take a section selector")]
    SelectorNotApplicable(TaskKind),
    #[error("cannot tell which task this template is for")]
    CannotInferTask,
    #[error("command list is empty")]
    EmptyCommandList,
    #[error(transparent)]
    SrsTemplate(#[from] SrsTemplateError),
}

/// Ordered summary commands such as `Write Introduction Section`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandList {
    commands: Vec<String>,
}

impl CommandList {
    pub fn new(commands: Vec<String>) -> Result<Self, PromptError> {
        let commands: Vec<String> = commands
            .into_iter()
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if commands.is_empty() {
            return Err(PromptError::EmptyCommandList);
        }
        Ok(CommandList { commands })
    }

    /// One command per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        CommandList::new(
            text.lines()
                .filter(|l| !l.trim_start().starts_with('#'))
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        CommandList::parse(&template::read(path)?)
    }

    pub fn commands(&self) -> &[String] {
        &self.commands
    }

    pub fn to_text(&self) -> String {
        let mut out = self.commands.join("\n");
        out.push('\n');
        out
    }
}

/// The shipped default prompt files, compiled into the library.
pub mod defaults {
    pub const SUMMARY: &str = include_str!("../../templates/summary.tmpl");
    pub const EXTRACTION: &str = include_str!("../../templates/extraction.tmpl");
    pub const CLASSIFICATION: &str = include_str!("../../templates/classification.tmpl");
    pub const COMMANDS: &str = include_str!("../../templates/commands.txt");
    pub const SRS_TEMPLATE: &str = include_str!("../../templates/srs_template.json");

    pub const SUMMARY_FILE: &str = "summary.tmpl";
    pub const EXTRACTION_FILE: &str = "extraction.tmpl";
    pub const CLASSIFICATION_FILE: &str = "classification.tmpl";
    pub const COMMANDS_FILE: &str = "commands.txt";
    pub const SRS_TEMPLATE_FILE: &str = "srs_template.json";
}

/// Everything a generation run needs from the template directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub summary: PromptTemplate,
    pub extraction: PromptTemplate,
    pub classification: PromptTemplate,
    pub commands: CommandList,
    pub srs: SrsTemplate,
}

impl TemplateSet {
    pub fn defaults() -> Self {
        TemplateSet::from_texts(
            defaults::SUMMARY,
            defaults::EXTRACTION,
            defaults::CLASSIFICATION,
            defaults::COMMANDS,
            defaults::SRS_TEMPLATE,
        )
        .expect("shipped templates are valid")
    }

    pub fn from_texts(
        summary: &str,
        extraction: &str,
        classification: &str,
        commands: &str,
        srs: &str,
    ) -> Result<Self, PromptError> {
        let set = TemplateSet {
            summary: PromptTemplate::parse_as(TaskKind::Summary, summary)?,
            extraction: PromptTemplate::parse_as(TaskKind::Extraction, extraction)?,
            classification: PromptTemplate::parse_as(TaskKind::Classification, classification)?,
            commands: CommandList::parse(commands)?,
            srs: SrsTemplate::from_json(srs)?,
        };
        set.validate()?;
        Ok(set)
    }

    /// Loads the five files from `dir`, falling back to the shipped default
    /// for any file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let read_or = |name: &str, fallback: &str| -> Result<String, PromptError> {
            let path = dir.join(name);
            if path.exists() {
                template::read(&path)
            } else {
                Ok(fallback.to_string())
            }
        };
        TemplateSet::from_texts(
            &read_or(defaults::SUMMARY_FILE, defaults::SUMMARY)?,
            &read_or(defaults::EXTRACTION_FILE, defaults::EXTRACTION)?,
            &read_or(defaults::CLASSIFICATION_FILE, defaults::CLASSIFICATION)?,
            &read_or(defaults::COMMANDS_FILE, defaults::COMMANDS)?,
            &read_or(defaults::SRS_TEMPLATE_FILE, defaults::SRS_TEMPLATE)?,
        )
    }

    /// Cross-file checks: the command list matches the SRS template's summary
    /// sections and every command resolves to a section block.
    pub fn validate(&self) -> Result<(), PromptError> {
        self.srs.check_commands(self.commands.commands())?;
        for command in self.commands.commands() {
            if self.summary.resolve_section(command).is_none() {
                return Err(PromptError::UnknownSection(command.clone()));
            }
        }
        Ok(())
    }

    /// Stable digest over all five files in their serialized form.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for part in [
            self.summary.to_text(),
            self.extraction.to_text(),
            self.classification.to_text(),
            self.commands.to_text(),
            serde_json::to_string(&self.srs).expect("SRS template serializes"),
        ] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
