//! Classification accuracy against labeled datasets.
//!
//! Two tasks are supported: binary FR vs NFR over the full label set, and
//! subtype classification over NFR-only data. Metrics are one-vs-rest per
//! class plus a support-weighted F1.

mod metrics;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{score, weighted_f1, ClassMetrics, ConfusionMatrix, MISSING_COLUMN};

use crate::classification::{classify, ClassificationError, ClassifyOptions, LabelAlphabet};
use crate::domain::{parse_label, DatasetRecord, NfrSubtype, Requirement, RequirementLabel, SourceTrace};
use crate::gateway::ChatBackend;
use crate::prompt::PromptTemplate;
use crate::ModelSettings;

pub const FUNCTIONAL_CLASS: &str = "F";
pub const NONFUNCTIONAL_CLASS: &str = "NFR";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("CSV header must contain the columns {0}")]
    MissingColumns(&'static str),
    #[error("dataset has no valid rows")]
    EmptyDataset { rejected: Vec<RejectedRow> },
    #[error("subtype evaluation needs NFR-only data; functional gold labels on {}", .0.join(", "))]
    GoldContainsFunctional(Vec<String>),
    #[error(transparent)]
    Classification(#[from] ClassificationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub rejected: Vec<RejectedRow>,
}

/// Parses `id,text,label` CSV (a leading `project` column is allowed and
/// ignored). Bad rows are skipped and reported with their line numbers.
pub fn parse_dataset(csv_text: &str) -> Result<Dataset, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    const COLUMNS: &str = "id, text, label";
    let headers = reader.headers().map_err(|_| EvalError::MissingColumns(COLUMNS))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(id_col), Some(text_col), Some(label_col)) = (column("id"), column("text"), column("label"))
    else {
        return Err(EvalError::MissingColumns(COLUMNS));
    };

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejected.push(RejectedRow { line, reason: e.to_string() });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let mut reject = |reason: String| rejected.push(RejectedRow { line, reason });
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let (id, text, label) = (field(id_col), field(text_col), field(label_col));
        if id.is_empty() {
            reject("empty id".into());
        } else if text.is_empty() {
            reject(format!("{id}: empty text"));
        } else if !seen.insert(id.clone()) {
            reject(format!("{id}: duplicate id"));
        } else {
            match parse_label(&label) {
                Ok(gold) => records.push(DatasetRecord { id, text, gold }),
                Err(e) => reject(format!("{id}: {e}")),
            }
        }
    }
    if records.is_empty() {
        return Err(EvalError::EmptyDataset { rejected });
    }
    Ok(Dataset { records, rejected })
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset, EvalError> {
    parse_dataset(&read(path)?)
}

fn rows_by_header(
    csv_text: &str,
    columns: [&'static str; 2],
    required: &'static str,
) -> Result<Vec<(u64, String, String)>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|_| EvalError::MissingColumns(required))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(a), Some(b)) = (column(columns[0]), column(columns[1])) else {
        return Err(EvalError::MissingColumns(required));
    };
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| EvalError::Io {
            path: "<csv>".into(),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        rows.push((line, field(a), field(b)));
    }
    Ok(rows)
}

/// Reads the `id` and `text` columns of a requirements CSV; any other
/// columns (such as a gold `label`) are ignored.
pub fn parse_requirement_rows(csv_text: &str) -> Result<Vec<(String, String)>, EvalError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, id, text) in rows_by_header(csv_text, ["id", "text"], "id, text")? {
        if id.is_empty() || text.is_empty() {
            log::warn!("line {line}: skipping row with empty id or text");
        } else if !seen.insert(id.clone()) {
            log::warn!("line {line}: skipping duplicate id {id}");
        } else {
            out.push((id, text));
        }
    }
    if out.is_empty() {
        return Err(EvalError::EmptyDataset { rejected: Vec::new() });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Predictions {
    pub labels: BTreeMap<String, RequirementLabel>,
    /// Rows whose label is not canonical, such as the unclassified marker.
    pub skipped: Vec<RejectedRow>,
}

/// Reads an `id,label` predictions CSV. Non-canonical labels are skipped, so
/// those ids count as missing.
pub fn parse_predictions(csv_text: &str) -> Result<Predictions, EvalError> {
    let mut predictions = Predictions::default();
    for (line, id, code) in rows_by_header(csv_text, ["id", "label"], "id, label")? {
        match parse_label(&code) {
            Ok(label) if !id.is_empty() => {
                predictions.labels.entry(id).or_insert(label);
            }
            _ => predictions.skipped.push(RejectedRow {
                line,
                reason: format!("{id}: no canonical label (`{code}`)"),
            }),
        }
    }
    Ok(predictions)
}

pub fn load_predictions(path: &Path) -> Result<Predictions, EvalError> {
    parse_predictions(&read(path)?)
}

/// `id,label` CSV text, one row per pair, in the given order.
pub fn predictions_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["id", "label"]).expect("in-memory write");
    for (id, label) in rows {
        writer.write_record([id, label]).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalTask {
    Binary,
    Subtype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub task: EvalTask,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_f1: f64,
    pub confusion: ConfusionMatrix,
    /// Records with no prediction.
    pub missing: usize,
    pub total: usize,
}

fn binary_class(label: RequirementLabel) -> &'static str {
    if label.is_functional() {
        FUNCTIONAL_CLASS
    } else {
        NONFUNCTIONAL_CLASS
    }
}

fn report(task: EvalTask, pairs: Vec<(String, Option<String>)>, labels: Vec<String>) -> EvaluationReport {
    let (per_class, confusion) = score(&pairs, &labels);
    EvaluationReport {
        task,
        weighted_f1: weighted_f1(&per_class),
        per_class,
        confusion,
        missing: pairs.iter().filter(|(_, p)| p.is_none()).count(),
        total: pairs.len(),
    }
}

/// FR vs NFR. Both classes are always reported; subtype predictions count
/// as NFR.
pub fn evaluate_binary(
    records: &[DatasetRecord],
    predictions: &BTreeMap<String, RequirementLabel>,
) -> EvaluationReport {
    let pairs = records
        .iter()
        .map(|r| {
            (
                binary_class(r.gold).to_string(),
                predictions.get(&r.id).map(|p| binary_class(*p).to_string()),
            )
        })
        .collect();
    report(
        EvalTask::Binary,
        pairs,
        vec![FUNCTIONAL_CLASS.to_string(), NONFUNCTIONAL_CLASS.to_string()],
    )
}

/// NFR subtypes over NFR-only gold data. Classes absent from both gold and
/// predictions are left out; a functional prediction is simply wrong.
pub fn evaluate_subtypes(
    records: &[DatasetRecord],
    predictions: &BTreeMap<String, RequirementLabel>,
) -> Result<EvaluationReport, EvalError> {
    let functional: Vec<String> = records
        .iter()
        .filter(|r| r.gold.is_functional())
        .map(|r| r.id.clone())
        .collect();
    if !functional.is_empty() {
        return Err(EvalError::GoldContainsFunctional(functional));
    }
    let pairs: Vec<(String, Option<String>)> = records
        .iter()
        .map(|r| {
            (
                r.gold.to_string(),
                predictions.get(&r.id).map(|p| p.to_string()),
            )
        })
        .collect();
    let labels = NfrSubtype::ALL
        .iter()
        .map(|s| s.code().to_string())
        .filter(|code| pairs.iter().any(|(g, p)| g == code || p.as_deref() == Some(code)))
        .collect();
    Ok(report(EvalTask::Subtype, pairs, labels))
}

fn class_name(task: EvalTask, code: &str) -> String {
    match (task, code) {
        (EvalTask::Binary, FUNCTIONAL_CLASS) => "Functional (F)".to_string(),
        (EvalTask::Binary, NONFUNCTIONAL_CLASS) => "Non-Functional (NFR)".to_string(),
        _ => match NfrSubtype::from_code(code) {
            Some(s) => format!("{} ({})", s.name(), s.code()),
            None => code.to_string(),
        },
    }
}

impl EvaluationReport {
    /// Per-class table, weighted F1 and confusion matrix, two decimals.
    pub fn to_markdown(&self) -> String {
        let title = match self.task {
            EvalTask::Binary => "Functional vs non-functional classification",
            EvalTask::Subtype => "Non-functional subtype classification",
        };
        let mut out = format!("# {title}\n\n");
        out.push_str(&metrics::metrics_table(&self.per_class, self.weighted_f1, |c| {
            class_name(self.task, c)
        }));
        let _ = writeln!(
            out,
            "\nRecords: {}. Without a prediction: {}.\n\n## Confusion matrix\n",
            self.total, self.missing
        );
        out.push_str(&metrics::confusion_table(&self.confusion));
        out
    }

    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.label == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub report: EvaluationReport,
    /// Canonical predictions by record id; unlabeled records are absent.
    pub predictions: BTreeMap<String, RequirementLabel>,
}

/// Classifies every record with the canonical label set and scores the
/// result.
pub fn run_classification_eval(
    records: &[DatasetRecord],
    task: EvalTask,
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
    settings: &ModelSettings,
    batch_size: usize,
    concurrency: usize,
) -> Result<EvalRun, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset { rejected: Vec::new() });
    }
    if task == EvalTask::Subtype {
        evaluate_subtypes(records, &BTreeMap::new())?;
    }
    let requirements: Vec<Requirement> = records
        .iter()
        .map(|r| Requirement {
            id: r.id.clone(),
            text: r.text.clone(),
            trace: SourceTrace {
                quote: String::new(),
                rationale: String::new(),
                verified: false,
            },
            label: None,
            pattern_ok: true,
        })
        .collect();
    let options = ClassifyOptions {
        batch_size,
        concurrency,
        alphabet: LabelAlphabet::canonical(),
        strict: false,
    };
    let outcome = classify(&requirements, template, backend, settings, &options)?;
    let predictions: BTreeMap<String, RequirementLabel> = outcome
        .requirements
        .iter()
        .filter_map(|r| Some((r.id.clone(), r.label.as_ref()?.canonical()?)))
        .collect();
    let report = match task {
        EvalTask::Binary => evaluate_binary(records, &predictions),
        EvalTask::Subtype => evaluate_subtypes(records, &predictions)?,
    };
    Ok(EvalRun { report, predictions })
}
