use std::fmt::Write;

use thiserror::Error;

use crate::domain::{DocumentError, Requirement, SectionKind, SrsDocument};

/// Appended to the source line of a requirement whose quote was not found
/// in the input.
pub const UNVERIFIED_MARKER: &str = "**UNVERIFIED TRACE**";

#[derive(Debug, Error)]
pub enum DocumentJsonError {
    #[error("malformed SRS JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] DocumentError),
}

fn requirement_item(out: &mut String, r: &Requirement) {
    let text = r.text.split_whitespace().collect::<Vec<_>>().join(" ");
    let _ = write!(out, "- **{}** {}", r.id, text);
    if !r.pattern_ok {
        out.push_str(" _(pattern not followed)_");
    }
    let _ = write!(out, "\n  - Source: \"{}\"", r.trace.quote);
    if !r.trace.verified {
        let _ = write!(out, " {UNVERIFIED_MARKER}");
    }
    let _ = writeln!(out, "\n  - Rationale: {}", r.trace.rationale);
}

fn requirement_list(out: &mut String, requirements: &[Requirement]) {
    for r in requirements {
        requirement_item(out, r);
    }
    out.push('\n');
}

/// Markdown rendering: sections in template order, every requirement id
/// exactly once.
pub fn render_markdown(doc: &SrsDocument) -> String {
    let mut out = String::from("# Software Requirements Specification\n\n");
    let _ = writeln!(
        out,
        "_Model: {}. Generated: {}. Templates: {}._\n",
        doc.provenance.model,
        doc.provenance.timestamp,
        doc.provenance.template_fingerprint.get(..12).unwrap_or(&doc.provenance.template_fingerprint)
    );

    for section in &doc.template.sections {
        let _ = writeln!(out, "## {}\n", section.title);
        match &section.kind {
            SectionKind::Summary { .. } => {
                let body = doc
                    .summary_sections
                    .get(&section.title)
                    .map(|b| b.trim())
                    .unwrap_or_default();
                let _ = writeln!(out, "{body}\n");
            }
            SectionKind::FunctionalRequirements => {
                if doc.functional.is_empty() {
                    out.push_str("_No functional requirements were extracted._\n\n");
                } else {
                    requirement_list(&mut out, &doc.functional);
                }
            }
            SectionKind::NonFunctionalRequirements => {
                if doc.nonfunctional.is_empty() && doc.custom.is_empty() {
                    out.push_str("_No non-functional requirements were extracted._\n\n");
                }
                for (subtype, bucket) in &doc.nonfunctional {
                    let _ = writeln!(out, "### {} ({})\n", subtype.name(), subtype.code());
                    requirement_list(&mut out, bucket);
                }
                for (code, bucket) in &doc.custom {
                    let _ = writeln!(out, "### {} ({})\n", bucket.title, code);
                    requirement_list(&mut out, &bucket.requirements);
                }
            }
        }
    }

    if !doc.unclassified.is_empty() {
        out.push_str("## Appendix: Diagnostics\n\n");
        out.push_str("### Unclassified Requirements\n\n");
        out.push_str("The classifier returned no usable label for these requirements.\n\n");
        requirement_list(&mut out, &doc.unclassified);
    }
    let trimmed = out.trim_end().len();
    out.truncate(trimmed);
    out.push('\n');
    out
}

pub fn render_json(doc: &SrsDocument) -> String {
    let mut json = serde_json::to_string_pretty(doc).expect("SRS document serializes");
    json.push('\n');
    json
}

/// Inverse of [`render_json`]; the document is validated after parsing.
pub fn parse_json(json: &str) -> Result<SrsDocument, DocumentJsonError> {
    let doc: SrsDocument = serde_json::from_str(json)?;
    doc.validate()?;
    Ok(doc)
}
