use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use reqforge::classification::{self, load_custom_labels, LabelAlphabet};
use reqforge::domain::{Requirement, SourceTrace, SrsTemplate};
use reqforge::eval::{
    evaluate_binary, evaluate_subtypes, load_dataset, load_predictions, parse_requirement_rows,
    predictions_csv, run_classification_eval, EvalTask,
};
use reqforge::gateway::{
    write_atomic, ChatBackend, LiveBackend, LiveConfig, RecordingBackend, ReplayBackend,
};
use reqforge::pipeline::{generate_srs, render_json, render_markdown, resolve_timestamp, RunConfig};
use reqforge::prompt::TemplateSet;
use reqforge::ModelSettings;

use crate::args::{
    BackendArgs, BackendKind, ClassifyArgs, ClassifyOptions, EvaluateArgs, GenerateArgs,
    GenerateOptions, LiveArgs, ModelArgs, OutputFormat, RecordArgs, RecordRun, TaskArg,
};
use crate::failure::Failure;

type Outcome = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> Outcome {
    write_atomic(path, contents.as_bytes())
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", prefix.display()))
}

fn templates(model: &ModelArgs) -> Result<TemplateSet, Failure> {
    let mut set = match &model.templates_dir {
        Some(dir) => TemplateSet::load_dir(dir)?,
        None => TemplateSet::defaults(),
    };
    if let Some(path) = &model.srs_template {
        set.srs = SrsTemplate::load(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        set.validate()?;
    }
    Ok(set)
}

fn alphabet(model: &ModelArgs) -> Result<LabelAlphabet, Failure> {
    match &model.custom_labels {
        Some(path) => Ok(LabelAlphabet::with_custom(load_custom_labels(path)?)),
        None => Ok(LabelAlphabet::canonical()),
    }
}

fn settings(model: &ModelArgs) -> Result<ModelSettings, Failure> {
    if !(model.temperature.is_finite() && model.temperature >= 0.0) {
        return Err(Failure::input(format!("invalid --temperature {}", model.temperature)));
    }
    Ok(ModelSettings {
        model: model.model.clone(),
        temperature: model.temperature,
        max_tokens: model.max_tokens,
    })
}

fn live_backend(live: &LiveArgs, max_in_flight: usize) -> Result<LiveBackend, Failure> {
    let config = LiveConfig {
        max_retries: live.max_retries,
        initial_backoff: Duration::from_millis(live.retry_backoff_ms),
        max_in_flight: max_in_flight.max(1),
        ..LiveConfig::from_env()
    };
    if config.api_key.is_none() {
        log::warn!("{} is not set; sending requests without authorization", reqforge::gateway::API_KEY_ENV);
    }
    Ok(LiveBackend::new(config)?)
}

fn backend(args: &BackendArgs, max_in_flight: usize) -> Result<Box<dyn ChatBackend>, Failure> {
    match args.backend {
        BackendKind::Replay => {
            let path = args
                .cassette
                .as_ref()
                .ok_or_else(|| Failure::input("--cassette is required with --backend replay"))?;
            Ok(Box::new(ReplayBackend::load(path)?))
        }
        BackendKind::Live => {
            if args.cassette.is_some() {
                log::warn!("--cassette is ignored with --backend live; use `record` to capture responses");
            }
            Ok(Box::new(live_backend(&args.live, max_in_flight)?))
        }
    }
}

pub fn generate(args: GenerateArgs) -> Outcome {
    let backend = backend(&args.backend, args.model.max_in_flight)?;
    let deterministic = args.backend.backend == BackendKind::Replay;
    run_generate(&args.options, &args.model, backend.as_ref(), deterministic)
}

fn run_generate(
    options: &GenerateOptions,
    model: &ModelArgs,
    backend: &dyn ChatBackend,
    deterministic: bool,
) -> Outcome {
    let input = read_text(&options.input)?;
    let templates = templates(model)?;
    let source_date_epoch = std::env::var("SOURCE_DATE_EPOCH").ok();
    let config = RunConfig {
        settings: settings(model)?,
        concurrency: model.max_in_flight.max(1),
        chunk_budget: options.chunk_budget,
        batch_size: options.batch_size.max(1),
        alphabet: alphabet(model)?,
        timestamp: resolve_timestamp(
            options.timestamp.as_deref(),
            source_date_epoch.as_deref(),
            deterministic,
        )
        .map_err(Failure::input)?,
    };

    let generation = match generate_srs(&input, &templates, backend, &config) {
        Ok(generation) => generation,
        Err(error) => {
            if let Some(partial) = error.partial() {
                let path = with_suffix(&options.out, ".partial.json");
                let json = serde_json::to_string_pretty(partial).expect("partial output serializes");
                if write_atomic(&path, json.as_bytes()).is_ok() {
                    log::warn!("partial results saved to {}", path.display());
                }
            }
            return Err(error.into());
        }
    };

    let doc = &generation.document;
    if matches!(options.format, OutputFormat::Md | OutputFormat::Both) {
        write_output(&with_suffix(&options.out, ".srs.md"), &render_markdown(doc))?;
    }
    if matches!(options.format, OutputFormat::Json | OutputFormat::Both) {
        write_output(&with_suffix(&options.out, ".srs.json"), &render_json(doc))?;
    }

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut unverified = 0;
    for r in doc.requirements() {
        let code = r.label.as_ref().map_or("-", |l| l.code()).to_string();
        *counts.entry(code).or_default() += 1;
        if !r.trace.verified {
            unverified += 1;
        }
    }
    println!("requirements: {}", doc.requirements().count());
    for (code, n) in &counts {
        println!("  {code}: {n}");
    }
    println!("unverified traces: {unverified}");
    println!("unclassified: {}", doc.unclassified.len());
    println!("rejected extraction blocks: {}", generation.rejected_blocks.len());
    for warning in &generation.warnings {
        log::warn!("{warning}");
    }
    Ok(())
}

pub fn classify(args: ClassifyArgs) -> Outcome {
    let backend = backend(&args.backend, args.model.max_in_flight)?;
    run_classify(&args.options, &args.model, backend.as_ref())
}

fn run_classify(options: &ClassifyOptions, model: &ModelArgs, backend: &dyn ChatBackend) -> Outcome {
    let rows = parse_requirement_rows(&read_text(&options.input)?)?;
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
    let templates = templates(model)?;
    let classify_options = classification::ClassifyOptions {
        batch_size: options.batch_size.max(1),
        concurrency: model.max_in_flight.max(1),
        alphabet: alphabet(model)?,
        strict: false,
    };
    let outcome = classification::classify(
        &requirements,
        &templates.classification,
        backend,
        &settings(model)?,
        &classify_options,
    )?;
    let csv = predictions_csv(
        outcome
            .requirements
            .iter()
            .map(|r| (r.id.as_str(), r.label.as_ref().map_or("", |l| l.code()))),
    );
    write_output(&options.out, &csv)?;
    println!(
        "classified: {}, unclassified: {}",
        outcome.requirements.len() - outcome.unlabeled.len(),
        outcome.unlabeled.len()
    );
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Outcome {
    let dataset = load_dataset(&args.gold)?;
    for row in &dataset.rejected {
        log::warn!("{} line {}: {}", args.gold.display(), row.line, row.reason);
    }
    let task = match args.task {
        TaskArg::Binary => EvalTask::Binary,
        TaskArg::Subtype => EvalTask::Subtype,
    };

    let report = match &args.predictions {
        Some(path) => {
            let predictions = load_predictions(path)?;
            for row in &predictions.skipped {
                log::warn!("{} line {}: {}", path.display(), row.line, row.reason);
            }
            match task {
                EvalTask::Binary => evaluate_binary(&dataset.records, &predictions.labels),
                EvalTask::Subtype => evaluate_subtypes(&dataset.records, &predictions.labels)?,
            }
        }
        None => {
            if args.model.custom_labels.is_some() {
                log::warn!("--custom-labels is ignored by evaluate; scoring uses the canonical labels");
            }
            let backend = backend(&args.backend, args.model.max_in_flight)?;
            let templates = templates(&args.model)?;
            let run = run_classification_eval(
                &dataset.records,
                task,
                &templates.classification,
                backend.as_ref(),
                &settings(&args.model)?,
                args.batch_size.max(1),
                args.model.max_in_flight.max(1),
            )?;
            let csv = predictions_csv(dataset.records.iter().map(|r| {
                let label = run.predictions.get(&r.id).map_or("", |l| reqforge::domain::format_label(*l));
                (r.id.as_str(), label)
            }));
            write_output(&with_suffix(&args.out, ".predictions.csv"), &csv)?;
            run.report
        }
    };

    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_output(&with_suffix(&args.out, ".json"), &json)?;
    let markdown = report.to_markdown();
    write_output(&with_suffix(&args.out, ".md"), &markdown)?;
    print!("{markdown}");
    Ok(())
}

pub fn record(args: RecordArgs) -> Outcome {
    match &args.run {
        RecordRun::Generate { options, model, live } => {
            let recorder = RecordingBackend::open(live_backend(live, model.max_in_flight)?, &args.cassette)?;
            run_generate(options, model, &recorder, false)
        }
        RecordRun::Classify { options, model, live } => {
            let recorder = RecordingBackend::open(live_backend(live, model.max_in_flight)?, &args.cassette)?;
            run_classify(options, model, &recorder)
        }
    }
}
