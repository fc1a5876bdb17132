//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and returns a [`CommandResult`]; the binary only prints it.
//!
//! Exit codes: 0 success, 1 user error (bad arguments, missing inputs),
//! 2 data error (malformed or invalid data), 3 internal invariant breach.
//! With `--json` every command prints exactly one JSON object on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::card;
use crate::dataset::{self, DatasetError, Split, Task};
use crate::experiment::{self, ExperimentError, ExperimentManifest};
use crate::lexicon::{self, LexiconError};
use crate::metrics::{self, Averaging, ErrorRateOptions, MetricsError, Variant};
use crate::pipeline::{self, PipelineError, RunOverrides};
use crate::transform::{transform_line, CasingPolicy, Mode, TransformPlan};

pub const SEED_ENV: &str = "VARIAFORGE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandResult {
    pub exit_code: i32,
    pub diagnostics: Vec<Diagnostic>,
    /// What goes to standard output.
    #[serde(skip)]
    pub stdout: String,
}

impl CommandResult {
    pub fn is_success(&self) -> bool {
        self.exit_code == 0
    }

    /// Diagnostics rendered for standard error.
    pub fn stderr(&self, quiet: bool) -> String {
        self.diagnostics
            .iter()
            .filter(|d| !quiet || d.severity == Severity::Error)
            .map(|d| {
                let sev = match d.severity {
                    Severity::Info => "info",
                    Severity::Warning => "warning",
                    Severity::Error => "error",
                };
                match &d.location {
                    Some(loc) => format!("{sev}: {loc}: {}\n", d.text),
                    None => format!("{sev}: {}\n", d.text),
                }
            })
            .collect()
    }
}

#[derive(Debug, Parser)]
#[command(name = "variaforge", version, about = "Orthographic variation toolkit: lexicons, transforms, metrics, dataset variants, experiment grids, language cards")]
pub struct Cli {
    /// Global seed for sampling (falls back to $VARIAFORGE_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only print errors on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Print a single JSON object on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and query variant lexicons.
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Destandardise or normalise a text file line by line.
    Transform(TransformArgs),
    /// Error rates, weighted F1 and result aggregation.
    #[command(subcommand)]
    Metrics(MetricsCmd),
    /// Check, transform, combine and count task datasets.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Experiment manifests and result matrices.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Sociolinguistic language cards.
    #[command(subcommand)]
    Card(CardCmd),
    /// Derive every dataset variant, the manifest and a divergence report.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Debug, Subcommand)]
pub enum LexiconCmd {
    /// Build a lexicon from an `observed<TAB>corrected` log.
    Build {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Source identifier stored in the file (default: log path).
        #[arg(long)]
        source: Option<String>,
        /// Build timestamp (unix seconds) to record.
        #[arg(long)]
        timestamp: Option<u64>,
    },
    /// Look up a standard form, or with --inverse a surface form.
    Lookup {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        inverse: bool,
        word: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Destandardise,
    Normalise,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Destandardise => Mode::Destandardise,
            ModeArg::Normalise => Mode::Normalise,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CasingArg {
    PreserveInitial,
    Literal,
}

impl From<CasingArg> for CasingPolicy {
    fn from(c: CasingArg) -> Self {
        match c {
            CasingArg::PreserveInitial => CasingPolicy::PreserveInitial,
            CasingArg::Literal => CasingPolicy::Literal,
        }
    }
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub max_edit_distance: usize,
    #[arg(long, value_enum, default_value = "preserve-initial")]
    pub casing: CasingArg,
    /// Namespace for per-token seeds (default: input file name).
    #[arg(long)]
    pub dataset_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub hyp: PathBuf,
    /// NFC-normalise both sides first.
    #[arg(long)]
    pub nfc: bool,
    /// Average per-line rates instead of pooling edits.
    #[arg(long = "macro")]
    pub macro_average: bool,
    /// Ignore punctuation and number tokens for WER.
    #[arg(long)]
    pub words_only: bool,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    /// Word error rate of line-aligned files.
    Wer(RateArgs),
    /// Character error rate of line-aligned files.
    Cer(RateArgs),
    /// Support-weighted F1 of line-aligned label files (last tab column; blank lines must align).
    F1 {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Aggregate a results JSONL file into mean ± std matrices.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DatasetSel {
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub split: String,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCmd {
    /// Parse and validate a dataset file.
    ReadCheck {
        #[command(flatten)]
        sel: DatasetSel,
        #[arg(long, default_value = "std")]
        variant: String,
        file: PathBuf,
    },
    /// Destandardise or normalise a dataset file (direction follows the task unless --mode/--force).
    Transform {
        #[command(flatten)]
        sel: DatasetSel,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Input variant (default: the task's native variant).
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = 2)]
        max_edit_distance: usize,
        #[arg(long, value_enum, default_value = "preserve-initial")]
        casing: CasingArg,
    },
    /// Concatenate the std and n-std versions of a split.
    Combine {
        #[command(flatten)]
        sel: DatasetSel,
        #[arg(long)]
        std: PathBuf,
        #[arg(long)]
        nstd: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Record counts per split under <root>/<TASK>/<variant>/, next to the reference sizes.
    Stats {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        variant: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Expand an experiment config into a manifest.
    Manifest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a results file, reporting duplicates and missing seeds.
    Collect {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Render the train × test matrix of one model and task.
    Render {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        task: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CardCmd {
    /// Print (or write) a template card.
    New {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List schema violations.
    Validate { file: PathBuf },
    /// Render a valid card as Markdown.
    Render {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PipelineCmd {
    /// Run the full derivation described by a pipeline config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure of one command, already classified by exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    location: Option<String>,
    text: String,
}

impl Failure {
    fn user(text: impl Into<String>) -> Self {
        Self {
            code: 1,
            location: None,
            text: text.into(),
        }
    }

    fn data(text: impl Into<String>) -> Self {
        Self {
            code: 2,
            location: None,
            text: text.into(),
        }
    }

    fn at(mut self, location: &Path) -> Self {
        self.location = Some(location.display().to_string());
        self
    }
}

fn io_failure(e: &std::io::Error) -> i32 {
    match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => 1,
        _ => 2,
    }
}

impl From<LexiconError> for Failure {
    fn from(e: LexiconError) -> Self {
        let code = match &e {
            LexiconError::Io(io) => io_failure(io),
            _ => 2,
        };
        Self {
            code,
            location: None,
            text: e.to_string(),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let code = match &e {
            DatasetError::Io { source, .. } => io_failure(source),
            DatasetError::Invariant(_) => 3,
            _ => 2,
        };
        Self {
            code,
            location: None,
            text: e.to_string(),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let code = match &e {
            ExperimentError::Io { source, .. } => io_failure(source),
            ExperimentError::UnknownTask(_) | ExperimentError::MissingDataset { .. } | ExperimentError::Config(_) => 1,
            _ => 2,
        };
        Self {
            code,
            location: None,
            text: e.to_string(),
        }
    }
}

impl From<card::CardError> for Failure {
    fn from(e: card::CardError) -> Self {
        match e {
            card::CardError::EmptyName => Failure::user(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Config(_) | PipelineError::MissingInput { .. } => 1,
            PipelineError::Dataset {
                source: DatasetError::Invariant(_),
                ..
            } => 3,
            PipelineError::Write { .. } => 1,
            _ => 2,
        };
        Self {
            code,
            location: None,
            text: e.to_string(),
        }
    }
}

/// Successful command output: human text plus a JSON payload.
struct Output {
    text: String,
    json: Value,
    diagnostics: Vec<Diagnostic>,
}

impl Output {
    fn new(text: impl Into<String>, json: Value) -> Self {
        Self {
            text: text.into(),
            json,
            diagnostics: Vec::new(),
        }
    }

    fn warn(mut self, text: impl Into<String>) -> Self {
        self.diagnostics.push(Diagnostic {
            severity: Severity::Warning,
            location: None,
            text: text.into(),
        });
        self
    }
}

type CmdResult = Result<Output, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: io_failure(&e),
        location: Some(path.display().to_string()),
        text: e.to_string(),
    })
}

fn write_text(path: &Path, content: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::user(e.to_string()).at(parent))?;
    }
    fs::write(path, content).map_err(|e| Failure::user(e.to_string()).at(path))
}

fn parse_arg<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::user)
}

fn lines_of(text: &str) -> Vec<&str> {
    text.lines().collect()
}

fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::user(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Parses `argv` (including the program name) and executes the command.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            let message = rendered.trim_end().trim_start_matches("error: ").to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandResult {
                    exit_code: 0,
                    diagnostics: vec![],
                    stdout: rendered,
                },
                _ => CommandResult {
                    exit_code: 1,
                    diagnostics: vec![Diagnostic {
                        severity: Severity::Error,
                        location: None,
                        text: message,
                    }],
                    stdout: String::new(),
                },
            };
        }
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> CommandResult {
    let json_mode = cli.json;
    let name = command_name(&cli.command);
    let outcome = resolve_seed(cli.seed).and_then(|seed| dispatch(cli.command, seed));
    match outcome {
        Ok(out) => {
            let stdout = if json_mode {
                let obj = json!({
                    "command": name,
                    "ok": true,
                    "exit_code": 0,
                    "result": out.json,
                    "diagnostics": out.diagnostics,
                });
                format!("{obj}\n")
            } else {
                out.text
            };
            CommandResult {
                exit_code: 0,
                diagnostics: out.diagnostics,
                stdout,
            }
        }
        Err(f) => {
            let diagnostics = vec![Diagnostic {
                severity: Severity::Error,
                location: f.location,
                text: f.text,
            }];
            let stdout = if json_mode {
                let obj = json!({
                    "command": name,
                    "ok": false,
                    "exit_code": f.code,
                    "result": Value::Null,
                    "diagnostics": diagnostics,
                });
                format!("{obj}\n")
            } else {
                String::new()
            };
            CommandResult {
                exit_code: f.code,
                diagnostics,
                stdout,
            }
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Lexicon(LexiconCmd::Build { .. }) => "lexicon build",
        Command::Lexicon(LexiconCmd::Lookup { .. }) => "lexicon lookup",
        Command::Transform(_) => "transform",
        Command::Metrics(MetricsCmd::Wer(_)) => "metrics wer",
        Command::Metrics(MetricsCmd::Cer(_)) => "metrics cer",
        Command::Metrics(MetricsCmd::F1 { .. }) => "metrics f1",
        Command::Metrics(MetricsCmd::Aggregate { .. }) => "metrics aggregate",
        Command::Dataset(DatasetCmd::ReadCheck { .. }) => "dataset read-check",
        Command::Dataset(DatasetCmd::Transform { .. }) => "dataset transform",
        Command::Dataset(DatasetCmd::Combine { .. }) => "dataset combine",
        Command::Dataset(DatasetCmd::Stats { .. }) => "dataset stats",
        Command::Experiment(ExperimentCmd::Manifest { .. }) => "experiment manifest",
        Command::Experiment(ExperimentCmd::Collect { .. }) => "experiment collect",
        Command::Experiment(ExperimentCmd::Render { .. }) => "experiment render",
        Command::Card(CardCmd::New { .. }) => "card new",
        Command::Card(CardCmd::Validate { .. }) => "card validate",
        Command::Card(CardCmd::Render { .. }) => "card render",
        Command::Pipeline(PipelineCmd::Run { .. }) => "pipeline run",
    }
}

fn dispatch(cmd: Command, seed: Option<u64>) -> CmdResult {
    match cmd {
        Command::Lexicon(c) => lexicon_cmd(c),
        Command::Transform(a) => transform_cmd(a, seed),
        Command::Metrics(c) => metrics_cmd(c),
        Command::Dataset(c) => dataset_cmd(c, seed),
        Command::Experiment(c) => experiment_cmd(c),
        Command::Card(c) => card_cmd(c),
        Command::Pipeline(PipelineCmd::Run { config, out }) => {
            let summary = pipeline::pipeline_run(&config, &RunOverrides { seed, out_dir: out })?;
            let mut text = format!(
                "wrote {} files to {} ({} training cells, {} evaluations)\n\n",
                summary.files.len(),
                summary.out_dir,
                summary.cells,
                summary.evaluations
            );
            text.push_str(&pipeline::render_divergence(&summary.divergence));
            Ok(Output::new(text, serde_json::to_value(&summary).expect("serialisable")))
        }
    }
}

fn lexicon_cmd(cmd: LexiconCmd) -> CmdResult {
    match cmd {
        LexiconCmd::Build {
            log,
            out,
            source,
            timestamp,
        } => {
            let text = read_text(&log)?;
            let rows = lexicon::read_correction_log(text.as_bytes()).map_err(|e| Failure::from(e).at(&log))?;
            let source = source.unwrap_or_else(|| log.display().to_string());
            let mut lex = lexicon::build_lexicon(rows, &source).map_err(|e| Failure::from(e).at(&log))?;
            lex.set_built_at(timestamp);
            write_text(&out, &lex.to_tsv())?;
            let json = json!({
                "entries": lex.len(),
                "total_corrections": lex.metadata().total_corrections,
                "out": out.display().to_string(),
            });
            Ok(Output::new(
                format!(
                    "{} entries from {} corrections -> {}\n",
                    lex.len(),
                    lex.metadata().total_corrections,
                    out.display()
                ),
                json,
            ))
        }
        LexiconCmd::Lookup {
            lexicon: path,
            inverse,
            word,
        } => {
            let lex = lexicon::load_lexicon(&path).map_err(|e| Failure::from(e).at(&path))?;
            let hits: Vec<(String, u64)> = if inverse {
                lex.inverse_lookup(&word).to_vec()
            } else {
                lex.lookup(&word).map(|e| e.variants().to_vec()).unwrap_or_default()
            };
            let text: String = if hits.is_empty() {
                "no entry\n".into()
            } else {
                hits.iter().map(|(s, c)| format!("{s}\t{c}\n")).collect()
            };
            let json = json!({
                "word": word,
                "inverse": inverse,
                "found": !hits.is_empty(),
                "items": hits.iter().map(|(s, c)| json!({"form": s, "count": c})).collect::<Vec<_>>(),
            });
            Ok(Output::new(text, json))
        }
    }
}

fn transform_cmd(a: TransformArgs, seed: Option<u64>) -> CmdResult {
    let lex = lexicon::load_lexicon(&a.lexicon).map_err(|e| Failure::from(e).at(&a.lexicon))?;
    let input = read_text(&a.input)?;
    let mode: Mode = a.mode.into();
    if mode == Mode::Destandardise && seed.is_none() {
        return Err(Failure::user(format!("destandardise needs --seed or {SEED_ENV}")));
    }
    let dataset_id = a.dataset_id.unwrap_or_else(|| {
        a.input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let plan = TransformPlan {
        mode,
        global_seed: seed.unwrap_or(0),
        casing: a.casing.into(),
        max_edit_distance: a.max_edit_distance,
        dataset_id,
    };
    let mut out = String::with_capacity(input.len());
    let mut changed = 0usize;
    let lines = lines_of(&input);
    for (i, line) in lines.iter().enumerate() {
        let t = transform_line(line, &lex, &plan, i as u64);
        if t != *line {
            changed += 1;
        }
        out.push_str(&t);
        out.push('\n');
    }
    write_text(&a.out, &out)?;
    let json = json!({
        "mode": mode.to_string(),
        "seed": plan.global_seed,
        "lines": lines.len(),
        "changed_lines": changed,
        "out": a.out.display().to_string(),
    });
    Ok(Output::new(
        format!("{mode}: {changed}/{} lines changed -> {}\n", lines.len(), a.out.display()),
        json,
    ))
}

fn rate_options(a: &RateArgs) -> ErrorRateOptions {
    ErrorRateOptions {
        averaging: if a.macro_average {
            Averaging::Macro
        } else {
            Averaging::Micro
        },
        words_only: a.words_only,
        nfc: a.nfc,
    }
}

/// Labels from a label file: last tab-separated column; `None` for blank
/// lines (sentence breaks).
fn label_lines(text: &str) -> Vec<Option<&str>> {
    text.lines()
        .map(|l| {
            let l = l.trim_end_matches('\r');
            if l.trim().is_empty() {
                None
            } else {
                Some(l.rsplit('\t').next().unwrap_or(l).trim())
            }
        })
        .collect()
}

fn metrics_cmd(cmd: MetricsCmd) -> CmdResult {
    match cmd {
        MetricsCmd::Wer(a) | MetricsCmd::Cer(a) => {
            let (r, h) = (read_text(&a.reference)?, read_text(&a.hyp)?);
            let report = metrics::corpus_error_rates(&lines_of(&r), &lines_of(&h), rate_options(&a))?;
            let text = format!(
                "WER {:.2} %  CER {:.2} %  (S={} I={} D={}, {} ref tokens, {} ref chars, {} lines)\n",
                report.wer,
                report.cer,
                report.substitutions,
                report.insertions,
                report.deletions,
                report.ref_token_count,
                report.ref_char_count,
                report.lines
            );
            Ok(Output::new(text, serde_json::to_value(&report).expect("serialisable")))
        }
        MetricsCmd::F1 { gold, pred } => {
            let (g, p) = (read_text(&gold)?, read_text(&pred)?);
            let (g, p) = (label_lines(&g), label_lines(&p));
            if g.len() != p.len() {
                return Err(Failure::data(format!(
                    "misaligned label files: gold has {} lines, prediction has {}",
                    g.len(),
                    p.len()
                )));
            }
            let mut gold_labels = Vec::new();
            let mut pred_labels = Vec::new();
            for (i, (a, b)) in g.iter().zip(&p).enumerate() {
                match (a, b) {
                    (Some(a), Some(b)) => {
                        gold_labels.push(*a);
                        pred_labels.push(*b);
                    }
                    (None, None) => {}
                    _ => {
                        return Err(Failure::data(format!(
                            "misaligned label files at line {}: sentence break in only one file",
                            i + 1
                        )))
                    }
                }
            }
            let f1 = metrics::weighted_f1(&gold_labels, &pred_labels)?;
            Ok(Output::new(
                format!("weighted F1 {f1:.2} % over {} labels\n", gold_labels.len()),
                json!({"weighted_f1": f1, "labels": gold_labels.len()}),
            ))
        }
        MetricsCmd::Aggregate { input, out } => {
            let text = read_text(&input)?;
            let collected = experiment::collect_results(&text, None).map_err(|e| Failure::from(e).at(&input))?;
            let cells: Vec<Value> = metrics::aggregate(&collected.records)
                .into_iter()
                .map(|(k, s)| {
                    json!({
                        "model": k.model,
                        "task": k.task,
                        "train_variant": k.train_variant,
                        "test_variant": k.test_variant,
                        "mean": s.mean,
                        "std": s.std,
                        "n": s.n,
                        "text": s.to_string(),
                    })
                })
                .collect();
            let mut matrices = Vec::new();
            let mut output_warnings = collected.warnings.clone();
            for m in experiment::render_all(&collected.records) {
                match m {
                    Ok(m) => matrices.push(m),
                    Err(e) => output_warnings.push(e.to_string()),
                }
            }
            let doc = json!({"cells": cells, "matrices": matrices});
            write_text(&out, &(serde_json::to_string_pretty(&doc).expect("serialisable") + "\n"))?;
            let mut text: String = matrices.iter().map(|m| m.to_text() + "\n").collect();
            text.push_str(&format!("{} cells -> {}\n", cells.len(), out.display()));
            let mut output = Output::new(text, doc);
            for w in output_warnings {
                output = output.warn(w);
            }
            Ok(output)
        }
    }
}

fn dataset_cmd(cmd: DatasetCmd, seed: Option<u64>) -> CmdResult {
    match cmd {
        DatasetCmd::ReadCheck { sel, variant, file } => {
            let task: Task = parse_arg(&sel.task)?;
            let split: Split = parse_arg(&sel.split)?;
            let variant: Variant = parse_arg(&variant)?;
            let ds = dataset::read_dataset(&file, task, split, variant)?;
            let labels = ds.label_counts();
            Ok(Output::new(
                format!("{}: {} {} records, {} distinct labels, ok\n", file.display(), ds.len(), task, labels.len()),
                json!({"task": task, "split": split, "variant": variant, "records": ds.len(), "labels": labels}),
            ))
        }
        DatasetCmd::Transform {
            sel,
            input,
            out,
            lexicon: lex_path,
            mode,
            variant,
            force,
            max_edit_distance,
            casing,
        } => {
            let task: Task = parse_arg(&sel.task)?;
            let split: Split = parse_arg(&sel.split)?;
            let variant: Variant = match variant {
                Some(v) => parse_arg(&v)?,
                None => task.native_variant(),
            };
            let mode: Mode = mode.map(Into::into).unwrap_or_else(|| task.derivation_mode());
            if mode == Mode::Destandardise && seed.is_none() {
                return Err(Failure::user(format!("destandardise needs --seed or {SEED_ENV}")));
            }
            let lex = lexicon::load_lexicon(&lex_path).map_err(|e| Failure::from(e).at(&lex_path))?;
            let ds = dataset::read_dataset(&input, task, split, variant)?;
            let plan = TransformPlan {
                mode,
                global_seed: seed.unwrap_or(0),
                casing: casing.into(),
                max_edit_distance,
                dataset_id: format!("{task}/{split}"),
            };
            let derived = dataset::transform_dataset(&ds, &lex, &plan, force)?;
            if derived.label_counts() != ds.label_counts() {
                return Err(Failure {
                    code: 3,
                    location: None,
                    text: "label multiset changed during transform".into(),
                });
            }
            dataset::write_dataset(&derived, &out)?;
            Ok(Output::new(
                format!("{} {} records ({} -> {}) -> {}\n", mode, derived.len(), ds.variant, derived.variant, out.display()),
                json!({"mode": mode.to_string(), "records": derived.len(), "variant": derived.variant, "out": out.display().to_string()}),
            ))
        }
        DatasetCmd::Combine { sel, std, nstd, out } => {
            let task: Task = parse_arg(&sel.task)?;
            let split: Split = parse_arg(&sel.split)?;
            let a = dataset::read_dataset(&std, task, split, Variant::Std)?;
            let b = dataset::read_dataset(&nstd, task, split, Variant::NStd)?;
            let comb = dataset::combine(&a, &b)?;
            dataset::write_dataset(&comb, &out)?;
            Ok(Output::new(
                format!("{} + {} = {} records -> {}\n", a.len(), b.len(), comb.len(), out.display()),
                json!({"records": comb.len(), "out": out.display().to_string()}),
            ))
        }
        DatasetCmd::Stats { root, task, variant } => {
            let tasks: Vec<Task> = match task {
                Some(t) => vec![parse_arg(&t)?],
                None => Task::ALL.to_vec(),
            };
            let variants: Vec<Variant> = match variant {
                Some(v) => vec![parse_arg(&v)?],
                None => Variant::ALL.to_vec(),
            };
            if !root.is_dir() {
                return Err(Failure::user("no such directory").at(&root));
            }
            let mut rows = Vec::new();
            let mut text = format!("{:<6}{:<7}{:>7}{:>7}{:>7}  reference\n", "task", "var", "train", "dev", "test");
            for &t in &tasks {
                for &v in &variants {
                    let s = dataset::dataset_stats(&root, t, v)?;
                    if s.counts.iter().all(Option::is_none) {
                        continue;
                    }
                    let cell = |c: Option<usize>| c.map_or("-".to_string(), |n| n.to_string());
                    // combined splits hold both halves
                    let factor = if v == Variant::Comb { 2 } else { 1 };
                    let reference = s.reference.map(|r| r * factor);
                    let matches = s.counts.iter().zip(reference).all(|(c, r)| *c == Some(r));
                    text.push_str(&format!(
                        "{:<6}{:<7}{:>7}{:>7}{:>7}  {}/{}/{} {}\n",
                        t.as_str(),
                        v.as_str(),
                        cell(s.counts[0]),
                        cell(s.counts[1]),
                        cell(s.counts[2]),
                        reference[0],
                        reference[1],
                        reference[2],
                        if matches { "ok" } else { "differs" }
                    ));
                    rows.push(json!({
                        "task": t,
                        "variant": v,
                        "train": s.counts[0],
                        "dev": s.counts[1],
                        "test": s.counts[2],
                        "reference": reference,
                        "matches_reference": matches,
                    }));
                }
            }
            if rows.is_empty() {
                return Err(Failure::user("no dataset files found").at(&root));
            }
            Ok(Output::new(text, json!({"datasets": rows})))
        }
    }
}

fn experiment_cmd(cmd: ExperimentCmd) -> CmdResult {
    match cmd {
        ExperimentCmd::Manifest { config, out } => {
            if !config.is_file() {
                return Err(Failure::user("no such file").at(&config));
            }
            let manifest = experiment::build_manifest(&config).map_err(|e| Failure::from(e).at(&config))?;
            write_text(&out, &manifest.to_toml())?;
            Ok(Output::new(
                format!(
                    "{} training cells, {} evaluations -> {}\n",
                    manifest.cells.len(),
                    manifest.evaluation_count(),
                    out.display()
                ),
                json!({"cells": manifest.cells.len(), "evaluations": manifest.evaluation_count(), "out": out.display().to_string()}),
            ))
        }
        ExperimentCmd::Collect { results, manifest } => {
            let manifest: Option<ExperimentManifest> = match manifest {
                Some(p) => Some(ExperimentManifest::from_toml(&read_text(&p)?).map_err(|e| Failure::from(e).at(&p))?),
                None => None,
            };
            let text = read_text(&results)?;
            let collected =
                experiment::collect_results(&text, manifest.as_ref()).map_err(|e| Failure::from(e).at(&results))?;
            let mut out = Output::new(
                format!("{} records, {} warnings\n", collected.records.len(), collected.warnings.len()),
                json!({"records": collected.records.len(), "warnings": collected.warnings}),
            );
            for w in collected.warnings {
                out = out.warn(w);
            }
            Ok(out)
        }
        ExperimentCmd::Render {
            results,
            model,
            task,
            out,
        } => {
            let text = read_text(&results)?;
            let collected = experiment::collect_results(&text, None).map_err(|e| Failure::from(e).at(&results))?;
            let model = model.unwrap_or_else(|| metrics::DEFAULT_MODEL.to_string());
            let matrix = experiment::render_matrix(&collected.records, &model, &task)?;
            let rendered = matrix.to_text();
            if let Some(out) = &out {
                write_text(out, &(matrix.to_json() + "\n"))?;
            }
            Ok(Output::new(rendered, serde_json::to_value(&matrix).expect("serialisable")))
        }
    }
}

fn card_cmd(cmd: CardCmd) -> CmdResult {
    match cmd {
        CardCmd::New { name, out } => {
            let template = card::new_card_template(&name)?;
            match out {
                Some(path) => {
                    write_text(&path, &template)?;
                    Ok(Output::new(
                        format!("template -> {}\n", path.display()),
                        json!({"out": path.display().to_string()}),
                    ))
                }
                None => Ok(Output::new(template.clone(), json!({"template": template}))),
            }
        }
        CardCmd::Validate { file } => {
            let text = read_text(&file)?;
            let violations = card::validate_card(&text).map_err(|e| Failure::from(e).at(&file))?;
            if violations.is_empty() {
                Ok(Output::new(format!("{}: valid\n", file.display()), json!({"valid": true, "violations": []})))
            } else {
                let listing: String = violations.iter().map(|v| format!("  {v}\n")).collect();
                Err(Failure::data(format!("{} violations\n{listing}", violations.len()).trim_end().to_string()).at(&file))
            }
        }
        CardCmd::Render { file, out } => {
            let text = read_text(&file)?;
            let parsed = card::parse_card(&text).map_err(|e| Failure::from(e).at(&file))?;
            let rendered = card::render_card(&parsed);
            match out {
                Some(path) => {
                    write_text(&path, &rendered)?;
                    Ok(Output::new(format!("rendered -> {}\n", path.display()), json!({"out": path.display().to_string()})))
                }
                None => Ok(Output::new(rendered.clone(), json!({"rendered": rendered}))),
            }
        }
    }
}
