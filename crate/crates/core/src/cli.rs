//! The `persona-probe` command line: ingest, split, train, eval-detector,
//! generate, assess, compare, report.
//!
//! Settings come from an optional `key = value` config file, overridden by
//! flags. API keys are read from the environment only.
//!
//! Exit statuses: 0 success, 1 unexpected failure, 2 input or configuration
//! error, 3 partial generation, 4 remote detector failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bootstrap::{
    assess_with_threads, compare, merge_others, mode_types, BootstrapError, BootstrapPlan, DistributionFile,
    DEFAULT_OTHERS_THRESHOLD, DISTRIBUTION_FORMAT,
};
use crate::corpus::{
    load_corpus, load_text_pool, save_corpus, save_text_pool, split_corpus, CorpusError, LabeledRecord,
};
use crate::detector::{
    train_baseline, ConstantDetector, Detector, DetectorError, DetectorMode, Hyperparameters, LinearModel,
    RemoteDetector,
};
use crate::genpipe::{
    load_content_sources, run_generation_with, ChatProvider, GenError, GenerationConfig, MockProvider,
    OpenAiProvider, RetryPolicy, Role, RunOptions, DEFAULT_COMMENT_TASKS, DEFAULT_POST_TASKS,
};
use crate::mbti::MbtiType;
use crate::metrics::{
    evaluation_report, render_dimension_table, render_summary_table, MetricReport, MetricsError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_REMOTE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Bad input files or configuration.
    Input(String),
    /// Some generation tasks failed.
    Partial(String),
    /// The remote detector failed.
    Remote(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Partial(_) => EXIT_PARTIAL,
            CliError::Remote(_) => EXIT_REMOTE,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Partial(m) | CliError::Remote(m) | CliError::Other(m) => m,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DetectorError> for CliError {
    fn from(e: DetectorError) -> Self {
        match e {
            DetectorError::Timeout | DetectorError::Transport(_) | DetectorError::MalformedResponse(_) => {
                CliError::Remote(e.to_string())
            }
            DetectorError::NonFiniteLoss { .. } => CliError::Other(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<BootstrapError> for CliError {
    fn from(e: BootstrapError) -> Self {
        match e {
            BootstrapError::Detector { source, set_index } => match CliError::from(source) {
                CliError::Remote(m) => CliError::Remote(format!("set {set_index}: {m}")),
                other => other,
            },
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "persona-probe",
    version,
    about = "MBTI evaluation of LLM-generated posts and comments"
)]
pub struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a labeled corpus and print its label histogram.
    Ingest(CorpusArgs),
    /// Split a corpus 81:9:10 into train/eval/test files.
    Split(CorpusArgs),
    /// Train the baseline detector and report on the eval split.
    Train(TrainArgs),
    /// Evaluate a saved model on the held-out test split.
    EvalDetector(EvalArgs),
    /// Generate posts and comments from event and tweet files.
    Generate(GenerateArgs),
    /// Bootstrap-assess a pool of generated texts.
    Assess(AssessArgs),
    /// Compare two distribution files.
    Compare(CompareArgs),
    /// Summarize distribution files as a table of most frequent types.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// binary-quad or direct-16.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_df: Option<u32>,
    #[arg(long)]
    pub max_features: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Which split to score: test (default) or eval.
    #[arg(long, default_value = "test")]
    pub subset: String,
}

#[derive(Args, Debug, Default)]
pub struct GenerateArgs {
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub tweets: Option<PathBuf>,
    /// mock or openai.
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model_name: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub max_posts: Option<usize>,
    #[arg(long)]
    pub max_comments: Option<usize>,
    /// Base delay of the retry backoff, in milliseconds.
    #[arg(long)]
    pub retry_base_ms: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pool file to write; failures go to `<stem>.failures.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct AssessArgs {
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Only use texts of this role.
    #[arg(long)]
    pub role: Option<String>,
    /// Trained baseline model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Predict this fixed type for every set.
    #[arg(long)]
    pub stub: Option<String>,
    /// URL of a remote detector.
    #[arg(long)]
    pub remote_url: Option<String>,
    #[arg(long)]
    pub n_sets: Option<usize>,
    #[arg(long)]
    pub set_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub label: Option<String>,
    /// Distribution file to write; the pie-chart CSV goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct CompareArgs {
    pub dist_a: PathBuf,
    pub dist_b: PathBuf,
    /// Report file to write (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ReportArgs {
    pub files: Vec<PathBuf>,
    #[arg(long)]
    pub threshold: Option<u32>,
}

/// Every setting a subcommand may use, after merging file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub mode: DetectorMode,
    pub hyperparameters: Hyperparameters,
    pub provider: String,
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub generation: GenerationConfig,
    pub parallelism: usize,
    pub max_posts: usize,
    pub max_comments: usize,
    pub retry_base_ms: u64,
    pub n_sets: usize,
    pub set_size: usize,
    pub others_threshold: u32,
    pub remote_url: Option<String>,
    pub remote_timeout_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            events: None,
            tweets: None,
            out_dir: PathBuf::from("out"),
            seed: None,
            mode: DetectorMode::BinaryQuad,
            hyperparameters: Hyperparameters::default(),
            provider: "mock".into(),
            base_url: "https://api.openai.com/v1".into(),
            model_name: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            generation: GenerationConfig::default(),
            parallelism: 4,
            max_posts: DEFAULT_POST_TASKS,
            max_comments: DEFAULT_COMMENT_TASKS,
            retry_base_ms: 1000,
            n_sets: 100,
            set_size: 50,
            others_threshold: DEFAULT_OTHERS_THRESHOLD,
            remote_url: None,
            remote_timeout_secs: 60,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Input(format!("config key {key}: {e}")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key.trim() {
            "corpus" => self.corpus = Some(v.into()),
            "events" => self.events = Some(v.into()),
            "tweets" => self.tweets = Some(v.into()),
            "out_dir" => self.out_dir = v.into(),
            "seed" => self.seed = Some(parse_value(key, v)?),
            "mode" => self.mode = v.parse().map_err(CliError::Input)?,
            "learning_rate" => self.hyperparameters.learning_rate = parse_value(key, v)?,
            "l2" => self.hyperparameters.l2 = parse_value(key, v)?,
            "epochs" => self.hyperparameters.epochs = parse_value(key, v)?,
            "min_df" => self.hyperparameters.min_df = parse_value(key, v)?,
            "max_features" => self.hyperparameters.max_features = parse_value(key, v)?,
            "provider" => self.provider = v.into(),
            "base_url" => self.base_url = v.into(),
            "model_name" => self.model_name = v.into(),
            "api_key_env" => self.api_key_env = v.into(),
            "temperature" => self.generation.temperature = parse_value(key, v)?,
            "top_p" => self.generation.top_p = parse_value(key, v)?,
            "max_tokens" => self.generation.max_tokens = parse_value(key, v)?,
            "parallelism" => self.parallelism = parse_value(key, v)?,
            "max_posts" => self.max_posts = parse_value(key, v)?,
            "max_comments" => self.max_comments = parse_value(key, v)?,
            "retry_base_ms" => self.retry_base_ms = parse_value(key, v)?,
            "n_sets" => self.n_sets = parse_value(key, v)?,
            "set_size" => self.set_size = parse_value(key, v)?,
            "others_threshold" => self.others_threshold = parse_value(key, v)?,
            "remote_url" => self.remote_url = Some(v.into()),
            "remote_timeout_secs" => self.remote_timeout_secs = parse_value(key, v)?,
            k if k.contains("key") || k.contains("secret") || k.contains("token") && k != "max_tokens" => {
                return Err(CliError::Input(format!(
                    "config key {k:?} looks like a secret; API keys are read from the environment only"
                )))
            }
            k => return Err(CliError::Input(format!("unknown config key {k:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_file_text(&mut self, text: &str) -> CliResult<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", i + 1)))?;
            self.set(key, value)
                .map_err(|e| CliError::Input(format!("config line {}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_file_text(&text)?;
        Ok(cfg)
    }

    /// Short hex digest of the canonical JSON form of this config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn require_seed(&self) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::Input("a seed is required (--seed or `seed = ...`)".into()))
    }

    fn require_path(&self, value: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
        let path = value
            .clone()
            .ok_or_else(|| CliError::Input(format!("missing {what} path")))?;
        if !path.exists() {
            return Err(CliError::Input(format!(
                "{what} file {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }
}

fn override_opt<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn apply_corpus_args(cfg: &mut RunConfig, args: &CorpusArgs) {
    if args.corpus.is_some() {
        cfg.corpus = args.corpus.clone();
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    override_opt(&mut cfg.out_dir, &args.out_dir);
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    config_hash: String,
    seed: Option<u64>,
}

fn meta<'a>(command: &'a str, cfg: &RunConfig) -> Meta<'a> {
    Meta {
        command,
        config_hash: cfg.hash(),
        seed: cfg.seed,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_records(cfg: &RunConfig) -> CliResult<Vec<LabeledRecord>> {
    let path = cfg
        .corpus
        .clone()
        .ok_or_else(|| CliError::Input("missing corpus path (--corpus)".into()))?;
    Ok(load_corpus(path)?)
}

fn cmd_ingest(cfg: &RunConfig) -> CliResult<()> {
    let records = load_records(cfg)?;
    let mut hist: BTreeMap<MbtiType, usize> = BTreeMap::new();
    for r in &records {
        *hist.entry(r.label).or_insert(0) += 1;
    }
    let docs: usize = records.iter().map(|r| r.docs.len()).sum();
    println!("records: {}", records.len());
    if !records.is_empty() {
        println!("documents per record: {:.2}", docs as f64 / records.len() as f64);
    }
    for (t, n) in &hist {
        println!("{t}  {n}");
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        meta: Meta<'a>,
        records: usize,
        documents: usize,
        labels: &'a BTreeMap<MbtiType, usize>,
    }
    write_json(
        &cfg.out_dir.join("ingest.json"),
        &Summary {
            meta: meta("ingest", cfg),
            records: records.len(),
            documents: docs,
            labels: &hist,
        },
    )
}

fn cmd_split(cfg: &RunConfig) -> CliResult<()> {
    let seed = cfg.require_seed()?;
    let records = load_records(cfg)?;
    let split = split_corpus(&records, seed)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Input(e.to_string()))?;
    save_corpus(cfg.out_dir.join("train.csv"), &split.train)?;
    save_corpus(cfg.out_dir.join("eval.csv"), &split.eval)?;
    save_corpus(cfg.out_dir.join("test.csv"), &split.test)?;
    let (a, b, c) = split.sizes();
    println!("train {a}, eval {b}, test {c} (seed {seed})");
    #[derive(Serialize)]
    struct Manifest<'a> {
        meta: Meta<'a>,
        train: usize,
        eval: usize,
        test: usize,
    }
    write_json(
        &cfg.out_dir.join("split.json"),
        &Manifest {
            meta: meta("split", cfg),
            train: a,
            eval: b,
            test: c,
        },
    )
}

fn evaluate(model: &dyn Detector, records: &[LabeledRecord]) -> CliResult<MetricReport> {
    let labels: Vec<MbtiType> = records.iter().map(|r| r.label).collect();
    let preds = records
        .iter()
        .map(|r| model.predict(&r.docs).map(|p| p.mbti))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(evaluation_report(&labels, &preds)?)
}

fn print_report(name: &str, report: &MetricReport) {
    let overall = report.overall_16.unwrap_or_default();
    println!("Average over dimensions:");
    print!("{}", render_summary_table(&[(name, report.headline())]));
    println!("\n16-class:");
    print!("{}", render_summary_table(&[(name, overall)]));
    println!("\nPer dimension:");
    print!("{}", render_dimension_table(report));
}

fn cmd_train(cfg: &RunConfig) -> CliResult<()> {
    let seed = cfg.require_seed()?;
    let records = load_records(cfg)?;
    let split = split_corpus(&records, seed)?;
    let model = train_baseline(&split.train, cfg.mode, &cfg.hyperparameters)?;
    let model_path = cfg.out_dir.join("model.json");
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Input(e.to_string()))?;
    model.save(&model_path)?;

    // Tiny corpora can leave the eval split empty; fall back to test.
    let eval_set = if split.eval.is_empty() {
        &split.test
    } else {
        &split.eval
    };
    let report = evaluate(&model, eval_set)?;
    println!(
        "trained {} on {} records, loss {:.4} -> {:.4}",
        cfg.mode,
        split.train.len(),
        model.summary.initial_loss,
        model.summary.final_loss
    );
    print_report(&format!("baseline ({})", cfg.mode), &report);
    #[derive(Serialize)]
    struct TrainOutput<'a> {
        meta: Meta<'a>,
        mode: DetectorMode,
        model_file: String,
        train_records: usize,
        eval_records: usize,
        initial_loss: f64,
        final_loss: f64,
        report: &'a MetricReport,
    }
    write_json(
        &cfg.out_dir.join("train_report.json"),
        &TrainOutput {
            meta: meta("train", cfg),
            mode: cfg.mode,
            model_file: model_path.display().to_string(),
            train_records: split.train.len(),
            eval_records: eval_set.len(),
            initial_loss: model.summary.initial_loss,
            final_loss: model.summary.final_loss,
            report: &report,
        },
    )
}

fn cmd_eval(cfg: &RunConfig, args: &EvalArgs) -> CliResult<()> {
    let seed = cfg.require_seed()?;
    let model_path = args
        .model
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join("model.json"));
    let model = LinearModel::load(&model_path)?;
    let records = load_records(cfg)?;
    let split = split_corpus(&records, seed)?;
    let subset = match args.subset.as_str() {
        "test" => &split.test,
        "eval" => &split.eval,
        other => return Err(CliError::Input(format!("unknown subset {other:?}"))),
    };
    let report = evaluate(&model, subset)?;
    print_report(&format!("baseline ({})", model.mode), &report);
    #[derive(Serialize)]
    struct EvalOutput<'a> {
        meta: Meta<'a>,
        subset: &'a str,
        records: usize,
        report: &'a MetricReport,
    }
    write_json(
        &cfg.out_dir.join(format!("{}_report.json", args.subset)),
        &EvalOutput {
            meta: meta("eval-detector", cfg),
            subset: &args.subset,
            records: subset.len(),
            report: &report,
        },
    )
}

fn build_provider(cfg: &RunConfig) -> CliResult<Box<dyn ChatProvider>> {
    match cfg.provider.as_str() {
        "mock" => Ok(Box::new(MockProvider::new())),
        "openai" => Ok(Box::new(OpenAiProvider::from_env(
            &cfg.base_url,
            cfg.model_name.clone(),
            &cfg.api_key_env,
            Duration::from_secs(60),
        )?)),
        other => Err(CliError::Input(format!(
            "unknown provider {other:?} (expected mock or openai)"
        ))),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "pool".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_generate(cfg: &RunConfig, args: &GenerateArgs) -> CliResult<()> {
    cfg.generation.validate()?;
    let provider = build_provider(cfg)?;
    let events = cfg.require_path(&cfg.events, "events")?;
    let tweets = cfg.require_path(&cfg.tweets, "tweets")?;
    let all = load_content_sources(events, tweets)?;
    let posts = all.iter().filter(|t| t.role == Role::Post).take(cfg.max_posts);
    let comments = all
        .iter()
        .filter(|t| t.role == Role::Comment)
        .take(cfg.max_comments);
    let tasks: Vec<_> = posts.chain(comments).cloned().collect();

    let options = RunOptions {
        parallelism: cfg.parallelism,
        retry: RetryPolicy {
            base_delay: Duration::from_millis(cfg.retry_base_ms),
            ..RetryPolicy::default()
        },
        fixed_timestamp: None,
    };
    let outcome = run_generation_with(&tasks, provider.as_ref(), &cfg.generation, &options)?;

    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.join("pool.jsonl"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Input(e.to_string()))?;
    }
    save_text_pool(&out, &outcome.texts)?;
    let mut failures = String::new();
    for f in &outcome.failures {
        failures.push_str(&serde_json::to_string(f).map_err(|e| CliError::Other(e.to_string()))?);
        failures.push('\n');
    }
    write_text(&sidecar(&out, "failures.jsonl"), &failures)?;
    #[derive(Serialize)]
    struct PoolMeta<'a> {
        meta: Meta<'a>,
        provider: &'a str,
        model: &'a str,
        generation: GenerationConfig,
        tasks: usize,
        generated: usize,
        failed: usize,
    }
    write_json(
        &sidecar(&out, "meta.json"),
        &PoolMeta {
            meta: meta("generate", cfg),
            provider: &cfg.provider,
            model: provider.model(),
            generation: cfg.generation,
            tasks: tasks.len(),
            generated: outcome.texts.len(),
            failed: outcome.failures.len(),
        },
    )?;
    println!(
        "generated {} of {} tasks -> {}",
        outcome.texts.len(),
        tasks.len(),
        out.display()
    );
    if outcome.is_complete() {
        Ok(())
    } else {
        Err(CliError::Partial(format!(
            "{} task(s) failed; see {}",
            outcome.failures.len(),
            sidecar(&out, "failures.jsonl").display()
        )))
    }
}

fn cmd_assess(cfg: &RunConfig, args: &AssessArgs) -> CliResult<()> {
    let seed = cfg.require_seed()?;
    let pool_path = cfg.require_path(&args.pool, "pool")?;
    let mut pool = load_text_pool(&pool_path)?;
    if let Some(role) = &args.role {
        let role: Role = serde_json::from_value(serde_json::Value::String(role.to_lowercase()))
            .map_err(|_| CliError::Input(format!("unknown role {role:?}")))?;
        pool.retain(|t| t.role == role);
    }
    let plan = BootstrapPlan::new(cfg.n_sets, cfg.set_size, seed)?;

    let remote_url = args.remote_url.clone().or_else(|| cfg.remote_url.clone());
    let (detector, detector_name): (Box<dyn Detector>, String) = match (&args.stub, &args.model, &remote_url)
    {
        (Some(code), None, None) => {
            let t = MbtiType::parse(code).map_err(|e| CliError::Input(e.to_string()))?;
            (Box::new(ConstantDetector(t)), format!("stub:{t}"))
        }
        (None, Some(path), None) => {
            let model = LinearModel::load(path)?;
            let name = format!("baseline:{}", model.mode);
            (Box::new(model), name)
        }
        (None, None, Some(url)) => (
            Box::new(RemoteDetector::new(
                url.clone(),
                Duration::from_secs(cfg.remote_timeout_secs),
                cfg.parallelism,
            )?),
            format!("remote:{url}"),
        ),
        _ => {
            return Err(CliError::Input(
                "choose exactly one detector: --model, --stub or --remote-url".into(),
            ))
        }
    };

    let distribution = assess_with_threads(&pool, detector.as_ref(), &plan, cfg.parallelism)?;
    let label = args
        .label
        .clone()
        .or_else(|| args.role.clone())
        .unwrap_or_else(|| {
            pool_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
    let file = DistributionFile {
        format: DISTRIBUTION_FORMAT.into(),
        label,
        detector: detector_name,
        plan,
        pool_size: pool.len(),
        config_hash: cfg.hash(),
        distribution,
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cfg.out_dir.join(format!("{}.dist.json", file.label)));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Input(e.to_string()))?;
    }
    file.save(&out)?;
    let display = merge_others(&file.distribution, cfg.others_threshold);
    write_text(&out.with_extension("csv"), &display.to_csv())?;
    let (mode, second) = mode_types(&file.distribution)?;
    println!(
        "{}: {} sets of {} -> {}{}",
        file.label,
        plan.n_sets,
        plan.set_size,
        mode,
        second.map(|s| format!(" ({s})")).unwrap_or_default()
    );
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let a = DistributionFile::load(&args.dist_a)?;
    let b = DistributionFile::load(&args.dist_b)?;
    let report = compare(&a.distribution, &b.distribution)?;
    print!("{}", report.render(&a.label, &b.label));
    if let Some(out) = &args.out {
        #[derive(Serialize)]
        struct CompareOutput<'a> {
            a: &'a str,
            b: &'a str,
            config_hash_a: &'a str,
            config_hash_b: &'a str,
            seed_a: u64,
            seed_b: u64,
            report: &'a crate::bootstrap::ConsistencyReport,
        }
        write_json(
            out,
            &CompareOutput {
                a: &a.label,
                b: &b.label,
                config_hash_a: &a.config_hash,
                config_hash_b: &b.config_hash,
                seed_a: a.plan.seed,
                seed_b: b.plan.seed,
                report: &report,
            },
        )?;
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig, args: &ReportArgs) -> CliResult<()> {
    if args.files.is_empty() {
        return Err(CliError::Input("no distribution files given".into()));
    }
    let threshold = args.threshold.unwrap_or(cfg.others_threshold);
    let files = args
        .files
        .iter()
        .map(DistributionFile::load)
        .collect::<Result<Vec<_>, _>>()?;
    let width = files.iter().map(|f| f.label.len()).max().unwrap_or(5).max(5);
    println!("{:<width$}  {:<12}  distribution", "label", "mode (2nd)");
    for f in &files {
        let (mode, second) = mode_types(&f.distribution)?;
        let display = merge_others(&f.distribution, threshold);
        let mut parts: Vec<String> = display
            .retained
            .iter()
            .map(|e| format!("{} {}", e.mbti, e.count))
            .collect();
        if display.others > 0 {
            parts.push(format!("Others {}", display.others));
        }
        let modes = match second {
            Some(s) => format!("{mode} ({s})"),
            None => mode.to_string(),
        };
        println!("{:<width$}  {:<12}  {}", f.label, modes, parts.join(", "));
    }
    Ok(())
}

/// Parses arguments, runs the subcommand and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Merges the config file with the subcommand's flags.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Ingest(a) | Command::Split(a) => apply_corpus_args(&mut cfg, a),
        Command::Train(a) => {
            apply_corpus_args(&mut cfg, &a.corpus);
            if let Some(mode) = &a.mode {
                cfg.mode = mode.parse().map_err(CliError::Input)?;
            }
            let hp = &mut cfg.hyperparameters;
            override_opt(&mut hp.learning_rate, &a.learning_rate);
            override_opt(&mut hp.l2, &a.l2);
            override_opt(&mut hp.epochs, &a.epochs);
            override_opt(&mut hp.min_df, &a.min_df);
            override_opt(&mut hp.max_features, &a.max_features);
        }
        Command::EvalDetector(a) => apply_corpus_args(&mut cfg, &a.corpus),
        Command::Generate(a) => {
            if a.events.is_some() {
                cfg.events = a.events.clone();
            }
            if a.tweets.is_some() {
                cfg.tweets = a.tweets.clone();
            }
            if a.seed.is_some() {
                cfg.seed = a.seed;
            }
            override_opt(&mut cfg.provider, &a.provider);
            override_opt(&mut cfg.base_url, &a.base_url);
            override_opt(&mut cfg.model_name, &a.model_name);
            override_opt(&mut cfg.api_key_env, &a.api_key_env);
            override_opt(&mut cfg.generation.temperature, &a.temperature);
            override_opt(&mut cfg.generation.top_p, &a.top_p);
            override_opt(&mut cfg.generation.max_tokens, &a.max_tokens);
            override_opt(&mut cfg.parallelism, &a.parallelism);
            override_opt(&mut cfg.max_posts, &a.max_posts);
            override_opt(&mut cfg.max_comments, &a.max_comments);
            override_opt(&mut cfg.retry_base_ms, &a.retry_base_ms);
        }
        Command::Assess(a) => {
            if a.seed.is_some() {
                cfg.seed = a.seed;
            }
            override_opt(&mut cfg.n_sets, &a.n_sets);
            override_opt(&mut cfg.set_size, &a.set_size);
            override_opt(&mut cfg.others_threshold, &a.threshold);
            override_opt(&mut cfg.parallelism, &a.parallelism);
        }
        Command::Compare(_) | Command::Report(_) => {}
    }
    if cfg.parallelism == 0 {
        return Err(CliError::Input("parallelism must be positive".into()));
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Ingest(_) => cmd_ingest(&cfg),
        Command::Split(_) => cmd_split(&cfg),
        Command::Train(_) => cmd_train(&cfg),
        Command::EvalDetector(a) => cmd_eval(&cfg, a),
        Command::Generate(a) => cmd_generate(&cfg, a),
        Command::Assess(a) => cmd_assess(&cfg, a),
        Command::Compare(a) => cmd_compare(a),
        Command::Report(a) => cmd_report(&cfg, a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let mut cfg = RunConfig::default();
        cfg.apply_file_text(
            "# comment\nseed = 7\nmode = direct-16\n\nepochs=12\ntemperature = 0.5\nn_sets = 20\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.mode, DetectorMode::Direct16);
        assert_eq!(cfg.hyperparameters.epochs, 12);
        assert_eq!(cfg.generation.temperature, 0.5);
        assert_eq!(cfg.n_sets, 20);
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/run.conf");
        let cfg = RunConfig::from_file(&path).unwrap();
        let defaults = RunConfig::default();
        assert_eq!(cfg.seed, Some(42));
        assert_eq!(cfg.hyperparameters, defaults.hyperparameters);
        assert_eq!(cfg.generation, defaults.generation);
        assert_eq!((cfg.n_sets, cfg.set_size), (100, 50));
        assert_eq!((cfg.max_posts, cfg.max_comments), (4500, 5000));
    }

    #[test]
    fn config_rejects_secrets_and_unknown_keys() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.apply_file_text("api_key = sk-123"),
            Err(CliError::Input(_))
        ));
        assert!(matches!(
            cfg.apply_file_text("colour = blue"),
            Err(CliError::Input(_))
        ));
        assert!(matches!(cfg.apply_file_text("seed: 3"), Err(CliError::Input(_))));
        assert!(matches!(cfg.apply_file_text("seed = x"), Err(CliError::Input(_))));
        assert!(cfg.apply_file_text("max_tokens = 100").is_ok());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "seed = 1\nepochs = 5\n").unwrap();
        let cli = Cli::try_parse_from([
            "persona-probe",
            "--config",
            path.to_str().unwrap(),
            "train",
            "--epochs",
            "9",
        ])
        .unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.seed, Some(1));
        assert_eq!(cfg.hyperparameters.epochs, 9);
    }

    #[test]
    fn config_hash_tracks_settings() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = Some(3);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(CliError::from(DetectorError::Timeout).exit_code(), EXIT_REMOTE);
        assert_eq!(
            CliError::from(DetectorError::EmptyVocabulary).exit_code(),
            EXIT_INPUT
        );
        assert_eq!(CliError::Partial(String::new()).exit_code(), EXIT_PARTIAL);
        let wrapped = BootstrapError::Detector {
            set_index: 3,
            source: DetectorError::Transport("refused".into()),
        };
        assert_eq!(CliError::from(wrapped).exit_code(), EXIT_REMOTE);
    }
}
