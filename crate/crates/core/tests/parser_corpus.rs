#[path = "support/corpus.rs"]
mod corpus;

use std::path::Path;

#[test]
fn corpus_matches_manifest() {
    let (cases, failures) = corpus::run_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/parser_corpus"));
    assert!(cases >= 15);
    assert!(failures.is_empty(), "{failures:#?}");
}
