//! Shared value types: labels, requirements, traces, SRS layout and dataset
//! records. Everything here is plain data.

mod label;
mod pattern;
mod requirement;
mod srs;

use serde::{Deserialize, Serialize};

pub use label::{
    format_label, parse_label, AssignedLabel, NfrSubtype, RequirementLabel, UnknownLabel,
    UNCLASSIFIED,
};
pub use pattern::{validate_pattern, PatternCheck};
pub use requirement::{first_duplicate_id, requirement_id, Requirement, SourceTrace};
pub use srs::{
    CustomBucket, DocumentError, Provenance, SectionKind, SectionSpec, SrsDocument, SrsTemplate,
    SrsTemplateError,
};

/// One labeled row of an evaluation dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub text: String,
    pub gold: RequirementLabel,
}
