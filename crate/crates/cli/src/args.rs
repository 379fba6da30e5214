use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "reqforge", version, about = "Generate and evaluate software requirements specifications")]
pub struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn stakeholder text into an SRS (`<out>.srs.md` / `<out>.srs.json`).
    Generate(GenerateArgs),
    /// Label requirements from an `id,text` CSV and write `id,label` predictions.
    Classify(ClassifyArgs),
    /// Score predictions against a gold `id,text,label` CSV.
    Evaluate(EvaluateArgs),
    /// Run `generate` or a dataset classification against the live API,
    /// writing every response into a cassette.
    Record(RecordArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Chat-completions HTTP API (REQFORGE_API_KEY, REQFORGE_API_BASE).
    Live,
    /// Answer from a cassette; never touches the network.
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Md,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    /// Functional vs non-functional.
    Binary,
    /// Non-functional subtypes (gold must be NFR-only).
    Subtype,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model name sent with every request.
    #[arg(long, default_value = reqforge::DEFAULT_MODEL)]
    pub model: String,

    /// Sampling temperature.
    #[arg(long, default_value_t = reqforge::gateway::DEFAULT_TEMPERATURE)]
    pub temperature: f64,

    /// Completion token limit (omitted from requests when unset).
    #[arg(long)]
    pub max_tokens: Option<u32>,

    /// Directory with summary.tmpl, extraction.tmpl, classification.tmpl,
    /// commands.txt and srs_template.json; missing files fall back to the
    /// built-in defaults.
    #[arg(long)]
    pub templates_dir: Option<PathBuf>,

    /// SRS section layout, overriding the one in --templates-dir.
    #[arg(long)]
    pub srs_template: Option<PathBuf>,

    /// Maximum concurrent model calls.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,

    /// JSON list of extra labels: [{"code", "name", "definition", "examples"}].
    #[arg(long)]
    pub custom_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    /// Where model answers come from.
    #[arg(long, value_enum, default_value_t = BackendKind::Replay)]
    pub backend: BackendKind,

    /// Cassette file for the replay backend.
    #[arg(long)]
    pub cassette: Option<PathBuf>,

    #[command(flatten)]
    pub live: LiveArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LiveArgs {
    /// Retries after a connect error, HTTP 429 or 5xx.
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,

    /// First retry delay in milliseconds; doubles on every retry.
    #[arg(long, default_value_t = 1000)]
    pub retry_backoff_ms: u64,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateOptions {
    /// Stakeholder text to turn into an SRS.
    #[arg(long)]
    pub input: PathBuf,

    /// Output path prefix.
    #[arg(long, default_value = "srs")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    pub format: OutputFormat,

    /// Provenance timestamp (RFC 3339). Defaults to SOURCE_DATE_EPOCH, then
    /// the Unix epoch for replay runs, then the current time.
    #[arg(long)]
    pub timestamp: Option<String>,

    /// Split inputs longer than this many bytes into paragraph-aligned
    /// extraction chunks (off by default; 24000 is a reasonable value).
    #[arg(long)]
    pub chunk_budget: Option<usize>,

    /// Requirements per classification prompt.
    #[arg(long, default_value_t = reqforge::classification::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub options: GenerateOptions,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyOptions {
    /// CSV with `id` and `text` columns.
    #[arg(long)]
    pub input: PathBuf,

    /// Predictions CSV to write.
    #[arg(long, default_value = "predictions.csv")]
    pub out: PathBuf,

    #[arg(long, default_value_t = reqforge::classification::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub options: ClassifyOptions,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Gold CSV: `id,text,label`, optionally with a leading project column.
    #[arg(long)]
    pub gold: PathBuf,

    /// Predictions CSV (`id,label`). Without it the gold texts are classified
    /// with the selected backend first.
    #[arg(long)]
    pub predictions: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = TaskArg::Binary)]
    pub task: TaskArg,

    /// Output prefix: writes `<out>.json` and `<out>.md`.
    #[arg(long, default_value = "report")]
    pub out: PathBuf,

    #[arg(long, default_value_t = reqforge::classification::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,

    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RecordArgs {
    /// Cassette to create or extend.
    #[arg(long)]
    pub cassette: PathBuf,

    #[command(subcommand)]
    pub run: RecordRun,
}

#[derive(Debug, Clone, Subcommand)]
pub enum RecordRun {
    /// Record a full SRS generation.
    Generate {
        #[command(flatten)]
        options: GenerateOptions,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        live: LiveArgs,
    },
    /// Record the classification of a requirements CSV.
    Classify {
        #[command(flatten)]
        options: ClassifyOptions,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        live: LiveArgs,
    },
}
