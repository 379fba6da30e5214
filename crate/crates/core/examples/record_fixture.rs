//! Regenerates the bundled cassettes from the scripted answers:
//! `fixtures/clinic/cassette.json` (a full generation) and
//! `fixtures/toy/cassette.json` (classification of `fixtures/toy/gold.csv`).
//!
//! Run after changing a default template or a scripted answer:
//! `cargo run -p reqforge --example record_fixture`

#[path = "../tests/support/scripted.rs"]
mod scripted;

use std::path::Path;

use reqforge::classification::{classify, ClassifyOptions};
use reqforge::domain::{Requirement, SourceTrace};
use reqforge::eval::parse_requirement_rows;
use reqforge::gateway::RecordingBackend;
use reqforge::pipeline::{generate_srs, RunConfig};
use reqforge::prompt::TemplateSet;
use reqforge::ModelSettings;

fn fresh(path: &Path) {
    if path.exists() {
        std::fs::remove_file(path).expect("remove old cassette");
    }
}

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");

    let clinic = fixtures.join("clinic");
    let cassette = clinic.join("cassette.json");
    fresh(&cassette);
    let input = std::fs::read_to_string(clinic.join("input.txt")).expect("read input");
    let recorder = RecordingBackend::open(scripted::Scripted::clinic(), &cassette).expect("open cassette");
    let generation = generate_srs(&input, &TemplateSet::defaults(), &recorder, &RunConfig::default())
        .expect("scripted run succeeds");
    println!(
        "clinic: recorded {} calls, {} requirements",
        recorder.cassette().len(),
        generation.document.requirements().count()
    );

    let toy = fixtures.join("toy");
    let cassette = toy.join("cassette.json");
    fresh(&cassette);
    let rows = parse_requirement_rows(&std::fs::read_to_string(toy.join("gold.csv")).expect("read gold"))
        .expect("toy rows parse");
    let requirements: Vec<Requirement> = rows
        .into_iter()
        .map(|(id, text)| Requirement {
            id,
            text,
            trace: SourceTrace {
                quote: String::new(),
                rationale: String::new(),
                verified: false,
            },
            label: None,
            pattern_ok: true,
        })
        .collect();
    let recorder = RecordingBackend::open(scripted::Scripted::new(toy.join("responses")), &cassette)
        .expect("open cassette");
    let outcome = classify(
        &requirements,
        &TemplateSet::defaults().classification,
        &recorder,
        &ModelSettings::default(),
        &ClassifyOptions::default(),
    )
    .expect("scripted classification succeeds");
    println!(
        "toy: recorded {} calls, {} unlabeled",
        recorder.cassette().len(),
        outcome.unlabeled.len()
    );
}
