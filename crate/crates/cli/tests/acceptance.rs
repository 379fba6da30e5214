//! Acceptance gate. Each `criterion_*` test is one pass/fail line in the
//! test report; run with `--nocapture` to see the measured values.
//!
//! Criterion 8 talks to a real model and is ignored by default; see the
//! README for how to run it.

#[path = "../../core/tests/support/corpus.rs"]
mod corpus;
#[path = "../../core/tests/support/http.rs"]
mod http;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use reqforge::classification::LabelAlphabet;
use reqforge::domain::{format_label, parse_label, validate_pattern, RequirementLabel};
use reqforge::eval::{evaluate_binary, evaluate_subtypes, weighted_f1, ClassMetrics, EvaluationReport};
use reqforge::pipeline::UNVERIFIED_MARKER;
use serde_json::Value;

use http::TestServer;
use oracle::{binary_name, full_pool, nfr_pool, oracle_class, oracle_weighted, random_case, rng};

const RUNS: usize = 3;
const MAX_RUNTIME: Duration = Duration::from_secs(5);
const METRIC_TOLERANCE: f64 = 1e-9;
const ORACLE_CASES: usize = 1000;
const ORACLE_MAX_RECORDS: usize = 50;
const LIVE_TOLERANCE: f64 = 0.05;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn reqforge() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_reqforge"));
    for var in ["REQFORGE_API_KEY", "REQFORGE_API_BASE", "SOURCE_DATE_EPOCH", "RUST_LOG"] {
        cmd.env_remove(var);
    }
    cmd
}

fn generate(cassette: &Path, out: &Path) -> Command {
    let mut cmd = reqforge();
    cmd.arg("generate")
        .arg("--input")
        .arg(fixtures().join("clinic/input.txt"))
        .arg("--cassette")
        .arg(cassette)
        .arg("--out")
        .arg(out);
    cmd
}

fn ok(output: Output) -> Output {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    output
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn requirement_items(doc: &Value) -> Vec<(String, &Value)> {
    let mut items: Vec<(String, &Value)> = doc["functional"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| ("functional".to_string(), r))
        .collect();
    for (code, list) in doc["nonfunctional"].as_object().unwrap() {
        items.extend(list.as_array().unwrap().iter().map(|r| (format!("nonfunctional/{code}"), r)));
    }
    if let Some(buckets) = doc["custom"].as_object() {
        for (code, bucket) in buckets {
            let list = bucket["requirements"].as_array().unwrap();
            items.extend(list.iter().map(|r| (format!("custom/{code}"), r)));
        }
    }
    if let Some(list) = doc["unclassified"].as_array() {
        items.extend(list.iter().map(|r| ("unclassified".to_string(), r)));
    }
    items
}

#[test]
fn criterion_1_pipeline_determinism() {
    let server = TestServer::start(vec![(500, String::new())]);
    let dir = tempfile::tempdir().unwrap();
    let cassette = fixtures().join("clinic/cassette.json");
    let mut outputs = Vec::new();
    let mut slowest = Duration::ZERO;
    for run in 0..RUNS {
        let out = dir.path().join(format!("run{run}"));
        let started = Instant::now();
        ok(generate(&cassette, &out)
            .env("REQFORGE_API_BASE", &server.base_url)
            .env("REQFORGE_API_KEY", "sk-must-not-be-used")
            .output()
            .unwrap());
        slowest = slowest.max(started.elapsed());
        outputs.push((
            std::fs::read(dir.path().join(format!("run{run}.srs.md"))).unwrap(),
            std::fs::read(dir.path().join(format!("run{run}.srs.json"))).unwrap(),
        ));
    }
    println!("{RUNS} runs, slowest {slowest:?}, network requests {}", server.count());
    assert!(outputs.windows(2).all(|w| w[0] == w[1]), "outputs differ between runs");
    assert_eq!(server.count(), 0, "replay must not touch the network");
    assert!(slowest < MAX_RUNTIME, "slowest run took {slowest:?}");
}

#[test]
fn criterion_2_structural_completeness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("clinic");
    ok(generate(&fixtures().join("clinic/cassette.json"), &out).output().unwrap());
    let doc: Value = serde_json::from_str(&read(&dir.path().join("clinic.srs.json"))).unwrap();
    let markdown = read(&dir.path().join("clinic.srs.md"));

    let expected = [
        "Introduction",
        "Stakeholders/Users",
        "Use Cases",
        "Glossary",
        "Functional Requirements",
        "Non-Functional Requirements",
    ];
    let titles: Vec<&str> = doc["template"]["sections"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["title"].as_str().unwrap())
        .collect();
    assert_eq!(titles, expected);
    for section in doc["template"]["sections"].as_array().unwrap() {
        let title = section["title"].as_str().unwrap();
        assert!(markdown.contains(&format!("\n## {title}\n")), "markdown lacks section {title}");
        if section["kind"] == "summary" {
            let body = doc["summary_sections"][title].as_str().unwrap_or_default();
            assert!(!body.trim().is_empty(), "empty summary section {title}");
        }
    }

    let items = requirement_items(&doc);
    let mut seen: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (place, item) in &items {
        seen.entry(item["id"].as_str().unwrap()).or_default().push(place);
        let label = item["label"].as_str().unwrap_or_default();
        match place.split_once('/') {
            Some((_, code)) => assert_eq!(label, code, "{} filed under {place}", item["id"]),
            None if place == "functional" => assert_eq!(label, "F"),
            None => {}
        }
    }
    assert!(!doc["functional"].as_array().unwrap().is_empty());
    assert!(!doc["nonfunctional"].as_object().unwrap().is_empty());
    for (id, places) in &seen {
        assert_eq!(places.len(), 1, "{id} appears in {places:?}");
        let heading = format!("- **{id}** ");
        assert_eq!(markdown.matches(&heading).count(), 1, "{id} rendered once in markdown");
    }
    let ids: Vec<usize> = seen.keys().map(|id| id.trim_start_matches("REQ-").parse().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (1..=ids.len()).collect::<Vec<_>>(), "ids are contiguous");
    println!("{} sections, {} requirements, each filed once", titles.len(), items.len());
}

fn assert_oracle(report: &EvaluationReport, gold: &[String], pred: &[Option<String>]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for m in &report.per_class {
        let o = oracle_class(gold, pred, &m.label);
        for (got, want) in [(m.precision, o.precision), (m.recall, o.recall), (m.f1, o.f1)] {
            worst = worst.max((got - want).abs());
        }
        assert_eq!(m.support, o.support, "{} support", m.label);
        rows.push(o);
    }
    worst = worst.max((report.weighted_f1 - oracle_weighted(&rows)).abs());
    assert!(worst <= METRIC_TOLERANCE, "deviation {worst}");
    worst
}

#[test]
fn criterion_3_metric_oracle_equivalence() {
    let mut rng = rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_CASES {
        let case = random_case(&mut rng, &full_pool(), ORACLE_MAX_RECORDS);
        let report = evaluate_binary(&case.records, &case.predictions);
        let gold: Vec<String> = case.records.iter().map(|r| binary_name(r.gold)).collect();
        let pred: Vec<Option<String>> = case
            .records
            .iter()
            .map(|r| case.predictions.get(&r.id).map(|p| binary_name(*p)))
            .collect();
        worst = worst.max(assert_oracle(&report, &gold, &pred));

        let case = random_case(&mut rng, &nfr_pool(), ORACLE_MAX_RECORDS);
        let report = evaluate_subtypes(&case.records, &case.predictions).unwrap();
        let gold: Vec<String> = case.records.iter().map(|r| r.gold.to_string()).collect();
        let pred: Vec<Option<String>> = case
            .records
            .iter()
            .map(|r| case.predictions.get(&r.id).map(|p| p.to_string()))
            .collect();
        assert!(gold.iter().all(|g| report.class(g).is_some()));
        worst = worst.max(assert_oracle(&report, &gold, &pred));
    }

    // Supports 3 and 1 with F1 1.0 and 0.5: (3 * 1.0 + 1 * 0.5) / 4.
    let expected = (3.0 * 1.0 + 1.0 * 0.5) / 4.0;
    let rows = [("X", 1.0, 3), ("Y", 0.5, 1)].map(|(label, f1, support)| ClassMetrics {
        label: label.into(),
        precision: f1,
        recall: f1,
        f1,
        support,
    });
    let weighted = weighted_f1(&rows);
    assert!((weighted - expected).abs() <= METRIC_TOLERANCE);
    assert!((weighted - 0.875).abs() <= METRIC_TOLERANCE);
    println!("{} oracle cases, worst deviation {worst:e}, worked example {weighted}", 2 * ORACLE_CASES);
}

#[test]
fn criterion_4_label_alphabet() {
    let all: Vec<RequirementLabel> = RequirementLabel::all().collect();
    assert_eq!(all.len(), 12);
    for label in &all {
        assert_eq!(parse_label(format_label(*label)).unwrap(), *label);
        assert_eq!(parse_label(&format_label(*label).to_lowercase()).unwrap(), *label);
        let resolved = LabelAlphabet::canonical().resolve(format_label(*label)).unwrap();
        assert_eq!(resolved.code(), format_label(*label));
    }
    let published = [
        ("Availability", "A"),
        ("Fault Tolerance", "FT"),
        ("Legal", "L"),
        ("Look & Feel", "LF"),
        ("Maintainability", "MN"),
        ("Operational", "O"),
        ("Performance", "PE"),
        ("Portability", "PO"),
        ("Scalability", "SC"),
        ("Security", "SE"),
        ("Usability", "US"),
    ];
    for (name, code) in published {
        let label = parse_label(code).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(label.subtype().unwrap().name(), name);
    }
    assert!(parse_label("X").is_err());
    assert!(parse_label("NFR").is_err());
    println!("12 labels round-trip; {} published subtype codes accepted", published.len());
}

#[test]
fn criterion_5_pattern_validator() {
    let suite: [(&str, bool); 20] = [
        ("The system shall encrypt all stored personal data.", true),
        ("The booking service shall send a reminder 24 hours before each appointment.", true),
        ("The system shall lock the account, when five consecutive login attempts fail.", true),
        ("The mobile app shall display the schedule in portrait mode.", true),
        ("The payment gateway shall reject the transaction, when the card has expired.", true),
        ("The reporting module shall export monthly summaries as CSV files.", true),
        ("The system shall not store passwords in plain text.", true),
        ("Each receptionist account shall require two-factor login.", true),
        ("The scheduler shall release the slot, when a patient cancels an appointment.", true),
        ("The backup job shall run every night at 02:00.", true),
        ("The user interface shall use the clinic colour scheme on every page.", true),
        ("The API shall respond within 200 milliseconds, when fewer than 1000 requests are in flight.", true),
        ("Encrypt all stored data.", false),
        ("The system should encrypt all stored data.", false),
        ("Shall send reminders to patients.", false),
        ("The system must lock the account after five failures.", false),
        ("The system shall.", false),
        ("The shallow copy is updated nightly.", false),
        ("The system shall log errors, when.", false),
        ("Patients will receive a reminder by text message.", false),
    ];
    assert_eq!(suite.iter().filter(|(_, ok)| !ok).count(), 8);
    let disagreements: Vec<&str> = suite
        .iter()
        .filter(|(text, expected)| validate_pattern(text).matched != *expected)
        .map(|(text, _)| *text)
        .collect();
    println!("{}/{} agree", suite.len() - disagreements.len(), suite.len());
    assert!(disagreements.is_empty(), "{disagreements:#?}");
}

#[test]
fn criterion_6_hallucination_guard() {
    let genuine = "only clinic staff may see visit notes";
    let fabricated = "visit notes are shared with insurance partners every week";
    let dir = tempfile::tempdir().unwrap();
    let mut cassette: Value = serde_json::from_str(&read(&fixtures().join("clinic/cassette.json"))).unwrap();
    let mut injected = 0;
    for entry in cassette["entries"].as_object_mut().unwrap().values_mut() {
        let content = entry["content"].as_str().unwrap();
        if content.contains("SOURCE:") && content.contains(genuine) {
            entry["content"] = Value::String(content.replace(genuine, fabricated));
            injected += 1;
        }
    }
    assert_eq!(injected, 1, "exactly one extraction answer carries the quote");
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string_pretty(&cassette).unwrap()).unwrap();

    let out = dir.path().join("srs");
    let output = ok(generate(&tampered, &out).output().unwrap());
    assert!(String::from_utf8_lossy(&output.stdout).contains("unverified traces: 1"));

    let markdown = read(&dir.path().join("srs.srs.md"));
    assert_eq!(markdown.matches(UNVERIFIED_MARKER).count(), 1);
    assert!(UNVERIFIED_MARKER.contains("UNVERIFIED TRACE"));
    let flagged_line = markdown.lines().find(|l| l.contains(UNVERIFIED_MARKER)).unwrap();
    assert!(flagged_line.contains(fabricated), "{flagged_line}");

    let doc: Value = serde_json::from_str(&read(&dir.path().join("srs.srs.json"))).unwrap();
    let unverified: Vec<&str> = requirement_items(&doc)
        .into_iter()
        .filter(|(_, r)| r["trace"]["verified"] == false)
        .map(|(_, r)| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(unverified.len(), 1, "{unverified:?}");
    println!("fabricated quote flagged on {} in both renderings", unverified[0]);
}

#[test]
fn criterion_7_parser_robustness() {
    let (cases, failures) = corpus::run_corpus(&fixtures().join("parser_corpus"));
    println!("{cases} corpus responses, {} mismatches", failures.len());
    assert!(cases >= 15);
    assert!(failures.is_empty(), "{failures:#?}");
}

/// Needs REQFORGE_API_KEY (and optionally REQFORGE_API_BASE) plus the full
/// PROMISE set as an `id,text,label` CSV in REQFORGE_PROMISE_CSV.
#[test]
#[ignore = "live model run; needs REQFORGE_API_KEY and REQFORGE_PROMISE_CSV"]
fn criterion_8_live_promise_scores() {
    const FR_F1: f64 = 0.90;
    const NFR_F1: f64 = 0.93;
    const SUBTYPE_WEIGHTED_F1: f64 = 0.81;

    let gold = PathBuf::from(std::env::var("REQFORGE_PROMISE_CSV").expect("REQFORGE_PROMISE_CSV is set"));
    assert!(std::env::var("REQFORGE_API_KEY").is_ok(), "REQFORGE_API_KEY is set");
    let dir = tempfile::tempdir().unwrap();

    let live = |gold: &Path, task: &str, out: &Path| -> Value {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_reqforge"));
        ok(cmd
            .arg("evaluate")
            .arg("--backend")
            .arg("live")
            .arg("--gold")
            .arg(gold)
            .arg("--task")
            .arg(task)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap());
        serde_json::from_str(&read(&out.with_extension("json"))).unwrap()
    };
    let class_f1 = |report: &Value, label: &str| -> f64 {
        report["per_class"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["label"] == label)
            .and_then(|c| c["f1"].as_f64())
            .unwrap()
    };

    let binary = live(&gold, "binary", &dir.path().join("binary"));
    let fr = class_f1(&binary, "F");
    let nfr = class_f1(&binary, "NFR");

    let dataset = reqforge::eval::load_dataset(&gold).unwrap();
    let nfr_gold = dir.path().join("nfr.csv");
    let mut writer = csv::Writer::from_path(&nfr_gold).unwrap();
    writer.write_record(["id", "text", "label"]).unwrap();
    for r in dataset.records.iter().filter(|r| !r.gold.is_functional()) {
        writer.write_record([r.id.as_str(), r.text.as_str(), format_label(r.gold)]).unwrap();
    }
    writer.flush().unwrap();
    let subtype = live(&nfr_gold, "subtype", &dir.path().join("subtype"));
    let weighted = subtype["weighted_f1"].as_f64().unwrap();

    println!("FR F1 {fr:.3} (target {FR_F1}), NFR F1 {nfr:.3} (target {NFR_F1}), subtype weighted F1 {weighted:.3} (target {SUBTYPE_WEIGHTED_F1})");
    assert!((fr - FR_F1).abs() <= LIVE_TOLERANCE);
    assert!((nfr - NFR_F1).abs() <= LIVE_TOLERANCE);
    assert!((weighted - SUBTYPE_WEIGHTED_F1).abs() <= LIVE_TOLERANCE);
}
