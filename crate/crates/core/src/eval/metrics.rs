use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// Column used in the confusion matrix for items that received no label.
pub const MISSING_COLUMN: &str = "missing";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Counts indexed `[gold][predicted]`. Predicted columns are `labels`
/// followed by any out-of-task labels seen, then [`MISSING_COLUMN`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn get(&self, gold: &str, predicted: &str) -> usize {
        let r = self.rows.iter().position(|l| l == gold);
        let c = self.columns.iter().position(|l| l == predicted);
        match (r, c) {
            (Some(r), Some(c)) => self.counts[r][c],
            _ => 0,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Support-weighted mean F1 over classes with non-zero support.
pub fn weighted_f1(per_class: &[ClassMetrics]) -> f64 {
    let total: usize = per_class.iter().map(|m| m.support).sum();
    if total == 0 {
        return 0.0;
    }
    per_class
        .iter()
        .filter(|m| m.support > 0)
        .map(|m| m.support as f64 / total as f64 * m.f1)
        .sum()
}

/// One-vs-rest metrics for every label in `labels`. Each pair is
/// `(gold, predicted)`; a `None` prediction is a false negative for the gold
/// class and a false positive for no class.
pub fn score(pairs: &[(String, Option<String>)], labels: &[String]) -> (Vec<ClassMetrics>, ConfusionMatrix) {
    let mut columns: Vec<String> = labels.to_vec();
    for (_, predicted) in pairs {
        if let Some(p) = predicted {
            if !columns.contains(p) {
                columns.push(p.clone());
            }
        }
    }
    columns.push(MISSING_COLUMN.to_string());
    let col = |label: Option<&String>| match label {
        Some(l) => columns.iter().position(|c| c == l).unwrap(),
        None => columns.len() - 1,
    };

    let mut rows: Vec<String> = labels.to_vec();
    for (gold, _) in pairs {
        if !rows.contains(gold) {
            rows.push(gold.clone());
        }
    }
    let mut counts = vec![vec![0usize; columns.len()]; rows.len()];
    for (gold, predicted) in pairs {
        let r = rows.iter().position(|l| l == gold).unwrap();
        counts[r][col(predicted.as_ref())] += 1;
    }

    let mut tp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fp: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fneg: BTreeMap<&str, usize> = BTreeMap::new();
    for (gold, predicted) in pairs {
        match predicted {
            Some(p) if p == gold => *tp.entry(gold).or_default() += 1,
            Some(p) => {
                *fp.entry(p).or_default() += 1;
                *fneg.entry(gold).or_default() += 1;
            }
            None => *fneg.entry(gold).or_default() += 1,
        }
    }

    let per_class = labels
        .iter()
        .map(|label| {
            let tp = tp.get(label.as_str()).copied().unwrap_or(0);
            let fp = fp.get(label.as_str()).copied().unwrap_or(0);
            let fneg = fneg.get(label.as_str()).copied().unwrap_or(0);
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fneg);
            ClassMetrics {
                label: label.clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: tp + fneg,
            }
        })
        .collect();
    (per_class, ConfusionMatrix { rows, columns, counts })
}

pub(crate) fn metrics_table(per_class: &[ClassMetrics], weighted: f64, names: impl Fn(&str) -> String) -> String {
    let mut out = String::from("| Class | Precision | Recall | F1 | Support |\n|---|---:|---:|---:|---:|\n");
    let mut total = 0;
    for m in per_class {
        total += m.support;
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {:.2} | {} |",
            names(&m.label),
            m.precision,
            m.recall,
            m.f1,
            m.support
        );
    }
    let _ = writeln!(out, "| Weighted average | | | {weighted:.2} | {total} |");
    out
}

pub(crate) fn confusion_table(matrix: &ConfusionMatrix) -> String {
    let mut out = String::from("| Gold \\ Predicted |");
    for c in &matrix.columns {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(matrix.columns.len()));
    out.push('\n');
    for (row, counts) in matrix.rows.iter().zip(&matrix.counts) {
        let _ = write!(out, "| {row} |");
        for n in counts {
            let _ = write!(out, " {n} |");
        }
        out.push('\n');
    }
    out
}
