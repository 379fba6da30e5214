//! Checks the parser corpus in `fixtures/parser_corpus` against its manifest.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use reqforge::classification::{parse_classification_output, LabelAlphabet};
use reqforge::extraction::{parse_extraction_output, ExtractionError};
use serde::Deserialize;

#[derive(Deserialize)]
struct Manifest {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    file: String,
    parser: String,
    accept: bool,
    #[serde(default)]
    items: usize,
    #[serde(default)]
    rejected: usize,
    #[serde(default)]
    expected_ids: Vec<String>,
    #[serde(default)]
    labels: BTreeMap<String, String>,
    note: String,
}

fn check(dir: &Path, case: &Case) -> Result<(), String> {
    let raw = std::fs::read_to_string(dir.join(&case.file)).map_err(|e| e.to_string())?;
    match case.parser.as_str() {
        "extraction" => match parse_extraction_output(&raw) {
            Ok(parsed) if case.accept => {
                if parsed.items.len() != case.items || parsed.rejected.len() != case.rejected {
                    return Err(format!(
                        "expected {}/{} accepted/rejected, got {}/{}",
                        case.items,
                        case.rejected,
                        parsed.items.len(),
                        parsed.rejected.len()
                    ));
                }
                Ok(())
            }
            Err(ExtractionError::ParseFailure { rejected }) if !case.accept => {
                if rejected.len() != case.rejected {
                    return Err(format!("expected {} rejected blocks, got {}", case.rejected, rejected.len()));
                }
                Ok(())
            }
            other => Err(format!("unexpected outcome {other:?}")),
        },
        "classification" => {
            match parse_classification_output(&raw, &case.expected_ids, &LabelAlphabet::canonical()) {
                Ok(parsed) if case.accept => {
                    let got: BTreeMap<String, String> = parsed
                        .labels
                        .iter()
                        .map(|(id, l)| (id.clone(), l.code().to_string()))
                        .collect();
                    if got != case.labels {
                        return Err(format!("labels {got:?} != {:?}", case.labels));
                    }
                    Ok(())
                }
                Err(_) if !case.accept => Ok(()),
                other => Err(format!("unexpected outcome {other:?}")),
            }
        }
        p => Err(format!("unknown parser {p}")),
    }
}

/// Number of cases and one message per case whose outcome differs from the manifest.
pub fn run_corpus(dir: &Path) -> (usize, Vec<String>) {
    let manifest: Manifest = serde_json::from_str(
        &std::fs::read_to_string(dir.join("manifest.json")).expect("manifest readable"),
    )
    .expect("manifest parses");
    let failures = manifest
        .cases
        .iter()
        .filter_map(|c| check(dir, c).err().map(|e| format!("{} ({}): {e}", c.file, c.note)))
        .collect();
    (manifest.cases.len(), failures)
}
