use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::label::AssignedLabel;

/// Where an extracted requirement came from, as claimed by the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTrace {
    /// Span the model claims to have quoted from the input.
    pub quote: String,
    /// The model's stated reason for extracting the requirement.
    pub rationale: String,
    /// Whether `quote` was found in the input after normalization.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub text: String,
    pub trace: SourceTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<AssignedLabel>,
    pub pattern_ok: bool,
}

/// Requirement ids follow extraction order, starting at one.
pub fn requirement_id(index: usize) -> String {
    format!("REQ-{}", index + 1)
}

/// First id that occurs more than once, if any.
pub fn first_duplicate_id<'a>(ids: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    let mut seen = HashSet::new();
    ids.into_iter().find(|id| !seen.insert(*id))
}
