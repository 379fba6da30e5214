use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::domain::AssignedLabel;

pub const INPUT_TEXT: &str = "INPUT_TEXT";
pub const SECTION_TITLE: &str = "SECTION_TITLE";
pub const SECTION_COMMAND: &str = "SECTION_COMMAND";
pub const REQUIREMENT_LIST: &str = "REQUIREMENT_LIST";

/// Placeholder names a template may reference.
pub const KNOWN_PLACEHOLDERS: &[&str] = &[INPUT_TEXT, SECTION_TITLE, SECTION_COMMAND, REQUIREMENT_LIST];

pub const ROLE: &str = "ROLE";
pub const SECTION_PREFIX: &str = "SECTION:";
pub const REQUIREMENT_DEFINITION: &str = "REQUIREMENT_DEFINITION";
pub const REQUIREMENT_PATTERN: &str = "REQUIREMENT_PATTERN";
pub const TRACE_TO_SOURCE: &str = "TRACE_TO_SOURCE";
pub const TASK: &str = "TASK";
pub const FR_NFR_DEFINITIONS: &str = "FR_NFR_DEFINITIONS";
pub const NFR_SUBTYPES: &str = "NFR_SUBTYPES";
pub const EXAMPLES: &str = "EXAMPLES";

static HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^===\s*(.*?)\s*===\s*$").unwrap());
static PLAIN_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Z][A-Z0-9_]*$").unwrap());
static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Summary,
    Extraction,
    Classification,
}

impl TaskKind {
    fn required_blocks(self) -> &'static [&'static str] {
        match self {
            TaskKind::Summary => &[ROLE],
            TaskKind::Extraction => &[ROLE, REQUIREMENT_DEFINITION, REQUIREMENT_PATTERN, TRACE_TO_SOURCE],
            TaskKind::Classification => &[TASK, FR_NFR_DEFINITIONS, NFR_SUBTYPES, EXAMPLES],
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Summary => "summary",
            TaskKind::Extraction => "extraction",
            TaskKind::Classification => "classification",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub tag: String,
    pub body: String,
}

impl Block {
    pub fn new(tag: impl Into<String>, body: impl Into<String>) -> Self {
        Block {
            tag: tag.into(),
            body: body.into(),
        }
    }

    pub fn section(title: &str, body: impl Into<String>) -> Self {
        Block::new(format!("{SECTION_PREFIX}{title}"), body)
    }

    /// Title of a `SECTION:<title>` block.
    pub fn section_title(&self) -> Option<&str> {
        self.tag.strip_prefix(SECTION_PREFIX).map(str::trim)
    }
}

/// Where [`PromptTemplate::extend`] inserts a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertPosition {
    Start,
    End,
    Index(usize),
    /// Right after the last block carrying this tag.
    After(String),
}

/// A task prompt made of tagged blocks, loaded from the `=== TAG ===` file
/// format. Immutable once built: extension returns a new template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    task: TaskKind,
    blocks: Vec<Block>,
    placeholders: BTreeSet<String>,
}

impl PromptTemplate {
    /// Builds and validates a template from blocks.
    pub fn new(task: TaskKind, blocks: Vec<Block>) -> Result<Self, PromptError> {
        for block in &blocks {
            check_tag(&block.tag)?;
            check_body(block)?;
        }
        let placeholders = collect_placeholders(&blocks)?;
        let template = PromptTemplate {
            task,
            blocks,
            placeholders,
        };
        template.check_structure()?;
        Ok(template)
    }

    /// Parses template text, inferring the task from the blocks present.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let blocks = parse_blocks(text)?;
        let task = infer_task(&blocks)?;
        PromptTemplate::new(task, blocks)
    }

    pub fn parse_as(task: TaskKind, text: &str) -> Result<Self, PromptError> {
        PromptTemplate::new(task, parse_blocks(text)?)
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn placeholders(&self) -> &BTreeSet<String> {
        &self.placeholders
    }

    pub fn section_titles(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().filter_map(Block::section_title)
    }

    /// Serializes back to the block file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str("=== ");
            out.push_str(&block.tag);
            out.push_str(" ===\n");
            if !block.body.is_empty() {
                out.push_str(&block.body);
                out.push('\n');
            }
        }
        out
    }

    /// The summary section a command refers to: the longest section title
    /// that occurs in the command, compared case-insensitively.
    pub fn resolve_section(&self, command: &str) -> Option<&str> {
        let command = command.to_lowercase();
        self.section_titles()
            .filter(|title| command.contains(&title.to_lowercase()))
            .max_by_key(|title| title.len())
    }

    /// Renders the prompt. Summary templates need a `selector` naming exactly
    /// one section; other tasks take none. The ROLE block comes first, then
    /// the remaining selected blocks in file order, joined by blank lines.
    /// Substitution is a single pass: text inserted from a binding is never
    /// scanned for placeholders again.
    pub fn render(
        &self,
        bindings: &BTreeMap<String, String>,
        selector: Option<&str>,
    ) -> Result<String, PromptError> {
        let selected: Vec<&Block> = match (self.task, selector) {
            (TaskKind::Summary, None) => return Err(PromptError::SelectorRequired),
            (TaskKind::Summary, Some(name)) => {
                let wanted = name.trim();
                if !self.section_titles().any(|t| t == wanted) {
                    return Err(PromptError::UnknownSection(name.to_string()));
                }
                self.blocks
                    .iter()
                    .filter(|b| b.section_title().is_none_or(|t| t == wanted))
                    .collect()
            }
            (task, Some(_)) => return Err(PromptError::SelectorNotApplicable(task)),
            (_, None) => self.blocks.iter().collect(),
        };

        let (roles, rest): (Vec<&Block>, Vec<&Block>) =
            selected.into_iter().partition(|b| b.tag == ROLE);

        let mut parts = Vec::new();
        for block in roles.into_iter().chain(rest) {
            parts.push(substitute(&block.body, bindings)?);
        }
        Ok(parts
            .into_iter()
            .filter(|p| !p.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n"))
    }

    /// Returns a copy with `block` inserted; `self` is left untouched.
    pub fn extend(&self, block: Block, position: InsertPosition) -> Result<Self, PromptError> {
        check_tag(&block.tag)?;
        check_body(&block)?;
        if let Some(title) = block.section_title() {
            if self
                .section_titles()
                .any(|t| t.eq_ignore_ascii_case(title))
            {
                return Err(PromptError::DuplicateSectionTag(block.tag.clone()));
            }
        }
        let index = match position {
            InsertPosition::Start => 0,
            InsertPosition::End => self.blocks.len(),
            InsertPosition::Index(i) if i <= self.blocks.len() => i,
            InsertPosition::Index(i) => {
                return Err(PromptError::InvalidPosition(format!(
                    "index {i} beyond {} blocks",
                    self.blocks.len()
                )))
            }
            InsertPosition::After(tag) => match self.blocks.iter().rposition(|b| b.tag == tag) {
                Some(i) => i + 1,
                None => return Err(PromptError::InvalidPosition(format!("no block tagged {tag}"))),
            },
        };
        let mut blocks = self.blocks.clone();
        blocks.insert(index, block);
        PromptTemplate::new(self.task, blocks)
    }

    /// Few-shot examples: `Requirement: <text>` lines followed by a
    /// `Label: <code>` line, inside EXAMPLES blocks.
    pub fn few_shot_examples(&self) -> Vec<FewShotExample> {
        let mut examples = Vec::new();
        for block in self.blocks.iter().filter(|b| b.tag == EXAMPLES) {
            let mut pending: Option<&str> = None;
            for line in block.body.lines().map(str::trim) {
                if let Some(text) = strip_key(line, "requirement") {
                    pending = Some(text);
                } else if let Some(code) = strip_key(line, "label") {
                    if let Some(text) = pending.take() {
                        if !code.is_empty() && !text.is_empty() {
                            examples.push(FewShotExample {
                                text: text.to_string(),
                                label: AssignedLabel::from_code(code),
                            });
                        }
                    }
                }
            }
        }
        examples
    }

    fn check_structure(&self) -> Result<(), PromptError> {
        for tag in self.task.required_blocks() {
            if !self.blocks.iter().any(|b| b.tag == *tag) {
                return Err(PromptError::MissingBlock(tag.to_string()));
            }
        }
        if self.task == TaskKind::Summary && self.section_titles().next().is_none() {
            return Err(PromptError::MissingBlock(format!("{SECTION_PREFIX}<name>")));
        }
        let mut seen = BTreeSet::new();
        for block in &self.blocks {
            if let Some(title) = block.section_title() {
                if !seen.insert(title.to_lowercase()) {
                    return Err(PromptError::DuplicateSectionTag(block.tag.clone()));
                }
            }
        }
        Ok(())
    }
}

/// A labeled requirement shown to the classifier as a worked example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub text: String,
    pub label: AssignedLabel,
}

fn strip_key<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let (head, tail) = line.split_once(':')?;
    head.trim()
        .eq_ignore_ascii_case(key)
        .then(|| tail.trim())
}

pub fn load_template(path: &Path) -> Result<PromptTemplate, PromptError> {
    PromptTemplate::parse(&read(path)?)
}

pub fn load_template_as(task: TaskKind, path: &Path) -> Result<PromptTemplate, PromptError> {
    PromptTemplate::parse_as(task, &read(path)?)
}

pub(crate) fn read(path: &Path) -> Result<String, PromptError> {
    std::fs::read_to_string(path).map_err(|source| PromptError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_blocks(text: &str) -> Result<Vec<Block>, PromptError> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut body: Vec<&str> = Vec::new();
    let flush = |blocks: &mut Vec<Block>, body: &mut Vec<&str>| {
        if let Some(last) = blocks.last_mut() {
            last.body = trim_blank_lines(body);
        }
        body.clear();
    };
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(caps) = HEADER.captures(line) {
            let tag = caps[1].to_string();
            check_tag(&tag).map_err(|_| PromptError::Parse {
                line: line_no,
                message: format!("malformed block tag `{tag}`"),
            })?;
            flush(&mut blocks, &mut body);
            blocks.push(Block::new(tag, String::new()));
        } else if line.starts_with("===") {
            return Err(PromptError::Parse {
                line: line_no,
                message: "malformed block header".into(),
            });
        } else if blocks.is_empty() {
            if !line.trim().is_empty() {
                return Err(PromptError::Parse {
                    line: line_no,
                    message: "text before the first block header".into(),
                });
            }
        } else {
            body.push(line);
        }
    }
    flush(&mut blocks, &mut body);
    if blocks.is_empty() {
        return Err(PromptError::Parse {
            line: 1,
            message: "no blocks found".into(),
        });
    }
    Ok(blocks)
}

fn trim_blank_lines(lines: &[&str]) -> String {
    let start = lines.iter().position(|l| !l.trim().is_empty());
    let end = lines.iter().rposition(|l| !l.trim().is_empty());
    match (start, end) {
        (Some(s), Some(e)) => lines[s..=e]
            .iter()
            .map(|l| l.trim_end())
            .collect::<Vec<_>>()
            .join("\n"),
        _ => String::new(),
    }
}

fn infer_task(blocks: &[Block]) -> Result<TaskKind, PromptError> {
    let has = |tag: &str| blocks.iter().any(|b| b.tag == tag);
    if blocks.iter().any(|b| b.section_title().is_some()) {
        Ok(TaskKind::Summary)
    } else if [REQUIREMENT_DEFINITION, REQUIREMENT_PATTERN, TRACE_TO_SOURCE]
        .iter()
        .any(|t| has(t))
    {
        Ok(TaskKind::Extraction)
    } else if [TASK, FR_NFR_DEFINITIONS, NFR_SUBTYPES, EXAMPLES]
        .iter()
        .any(|t| has(t))
    {
        Ok(TaskKind::Classification)
    } else {
        Err(PromptError::CannotInferTask)
    }
}

fn check_tag(tag: &str) -> Result<(), PromptError> {
    let ok = match tag.strip_prefix(SECTION_PREFIX) {
        Some(title) => {
            let title = title.trim();
            !title.is_empty() && !title.contains("===")
        }
        None => PLAIN_TAG.is_match(tag),
    };
    if ok {
        Ok(())
    } else {
        Err(PromptError::InvalidTag(tag.to_string()))
    }
}

fn check_body(block: &Block) -> Result<(), PromptError> {
    if block.body.lines().any(|l| l.starts_with("===")) {
        return Err(PromptError::InvalidBody(block.tag.clone()));
    }
    Ok(())
}

fn collect_placeholders(blocks: &[Block]) -> Result<BTreeSet<String>, PromptError> {
    let mut names = BTreeSet::new();
    for block in blocks {
        for caps in PLACEHOLDER.captures_iter(&block.body) {
            let name = &caps[1];
            if !KNOWN_PLACEHOLDERS.contains(&name) {
                return Err(PromptError::UnknownPlaceholder(name.to_string()));
            }
            names.insert(name.to_string());
        }
    }
    Ok(names)
}

fn substitute(body: &str, bindings: &BTreeMap<String, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(body.len());
    let mut last = 0;
    for caps in PLACEHOLDER.captures_iter(body) {
        let whole = caps.get(0).unwrap();
        let name = &caps[1];
        let value = bindings
            .get(name)
            .ok_or_else(|| PromptError::MissingBinding(name.to_string()))?;
        out.push_str(&body[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&body[last..]);
    Ok(out)
}
