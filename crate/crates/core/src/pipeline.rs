//! End-to-end derivation of every dataset variant, the experiment manifest
//! and a divergence report from raw task data and a lexicon.
//!
//! Config (TOML, paths relative to the config file):
//!
//! ```toml
//! lexicon = "lexicon.tsv"
//! out_dir = "out"
//! seed = 2024                 # global transform seed
//! casing = "preserve-initial"
//! max_edit_distance = 2
//! models = ["tiny-encoder"]
//! seeds = [1, 2]
//!
//! [[tasks]]
//! id = "POS"
//! dir = "raw/POS"             # holds train/dev/test in the task's native variant
//! ```
//!
//! Output tree under `out_dir`:
//! `datasets/<TASK>/<variant>/<split>.<ext>`, `manifest.toml`, `divergence.txt`.
//! Every input is read and every output rendered in memory before the first
//! file is written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{self, combine, render_dataset, transform_dataset, Dataset, DatasetError, Split, Task};
use crate::experiment::{self, ExperimentConfig, ExperimentError, ExperimentManifest, TaskConfig};
use crate::lexicon::{load_lexicon, LexiconError};
use crate::metrics::{corpus_error_rates, ErrorRateOptions, ErrorRateReport, MetricsError, Variant};
use crate::transform::{CasingPolicy, Mode, TransformPlan};

pub const DATASETS_DIR: &str = "datasets";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const REPORT_FILE: &str = "divergence.txt";
pub const RESULTS_FILE: &str = "results.jsonl";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input {what}: {path}")]
    MissingInput { what: &'static str, path: String },
    #[error("lexicon {path}: {source}")]
    Lexicon {
        path: String,
        #[source]
        source: LexiconError,
    },
    #[error("{task}/{split}: {source}")]
    Dataset {
        task: Task,
        split: Split,
        #[source]
        source: DatasetError,
    },
    #[error("{task}: {source}")]
    Metrics {
        task: Task,
        #[source]
        source: MetricsError,
    },
    #[error(transparent)]
    Manifest(#[from] ExperimentError),
    #[error("writing {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineTask {
    pub id: String,
    pub dir: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub lexicon: String,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub casing: Option<String>,
    #[serde(default = "default_max_edit_distance")]
    pub max_edit_distance: usize,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub seeds: Option<Vec<i64>>,
    pub tasks: Vec<PipelineTask>,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_max_edit_distance() -> usize {
    2
}

fn default_models() -> Vec<String> {
    vec!["tiny-encoder".into()]
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Per-task divergence between the native and the derived variant.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceRow {
    pub task: Task,
    pub mode: String,
    pub report: ErrorRateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub out_dir: String,
    pub files: Vec<String>,
    pub divergence: Vec<DivergenceRow>,
    pub cells: usize,
    pub evaluations: usize,
}

/// Everything a run will write, keyed by path relative to the output dir.
#[derive(Debug)]
pub struct PipelineOutput {
    pub files: BTreeMap<String, String>,
    pub manifest: ExperimentManifest,
    pub divergence: Vec<DivergenceRow>,
}

/// Resolved run settings after CLI/environment overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

fn rel_dataset_path(task: Task, variant: Variant, split: Split) -> String {
    format!(
        "{DATASETS_DIR}/{}/{}/{}.{}",
        task,
        variant,
        split,
        task.file_extension()
    )
}

/// Reads inputs and renders every output without touching the filesystem
/// for writing.
pub fn plan_pipeline(config: &PipelineConfig, base_dir: &Path, seed: u64) -> Result<PipelineOutput, PipelineError> {
    let casing: CasingPolicy = match &config.casing {
        Some(c) => c.parse().map_err(PipelineError::Config)?,
        None => CasingPolicy::default(),
    };
    if config.tasks.is_empty() {
        return Err(PipelineError::Config("no tasks listed".into()));
    }
    let mut tasks = Vec::new();
    for t in &config.tasks {
        let task: Task = t.id.parse().map_err(PipelineError::Config)?;
        if tasks.iter().any(|(seen, _)| *seen == task) {
            return Err(PipelineError::Config(format!("task {task} listed twice")));
        }
        tasks.push((task, base_dir.join(&t.dir)));
    }

    let lexicon_path = base_dir.join(&config.lexicon);
    if !lexicon_path.is_file() {
        return Err(PipelineError::MissingInput {
            what: "lexicon",
            path: lexicon_path.display().to_string(),
        });
    }
    for (task, dir) in &tasks {
        for split in Split::ALL {
            let p = dir.join(format!("{split}.{}", task.file_extension()));
            if !p.is_file() {
                return Err(PipelineError::MissingInput {
                    what: "dataset",
                    path: p.display().to_string(),
                });
            }
        }
    }
    let lexicon = load_lexicon(&lexicon_path).map_err(|source| PipelineError::Lexicon {
        path: lexicon_path.display().to_string(),
        source,
    })?;

    let mut files = BTreeMap::new();
    let mut divergence = Vec::new();
    for (task, dir) in &tasks {
        let task = *task;
        let mode = task.derivation_mode();
        let mut source_lines = Vec::new();
        let mut derived_lines = Vec::new();
        for split in Split::ALL {
            let ds_err = |source| PipelineError::Dataset { task, split, source };
            let path = dir.join(format!("{split}.{}", task.file_extension()));
            let native = dataset::read_dataset(&path, task, split, task.native_variant()).map_err(ds_err)?;
            let plan = TransformPlan {
                mode,
                global_seed: seed,
                casing,
                max_edit_distance: config.max_edit_distance,
                dataset_id: format!("{task}/{split}"),
            };
            let derived = transform_dataset(&native, &lexicon, &plan, false).map_err(ds_err)?;
            source_lines.extend(native.text_lines());
            derived_lines.extend(derived.text_lines());
            let (std, nstd): (&Dataset, &Dataset) = match mode {
                Mode::Destandardise => (&native, &derived),
                Mode::Normalise => (&derived, &native),
            };
            let comb = combine(std, nstd).map_err(ds_err)?;
            for ds in [std, nstd, &comb] {
                files.insert(rel_dataset_path(task, ds.variant, split), render_dataset(ds));
            }
        }
        let report = corpus_error_rates(&source_lines, &derived_lines, ErrorRateOptions::default())
            .map_err(|source| PipelineError::Metrics { task, source })?;
        divergence.push(DivergenceRow {
            task,
            mode: mode.to_string(),
            report,
        });
    }

    let exp_config = ExperimentConfig {
        results: RESULTS_FILE.into(),
        models: config.models.clone(),
        seeds: config.seeds.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
        train_variants: Variant::ALL.to_vec(),
        data_root: Some(DATASETS_DIR.into()),
        tasks: tasks
            .iter()
            .map(|(t, _)| TaskConfig {
                id: t.to_string(),
                ..Default::default()
            })
            .collect(),
    };
    let manifest = experiment::expand_manifest(&exp_config, |p| files.contains_key(p))?;
    files.insert(MANIFEST_FILE.into(), manifest.to_toml());
    files.insert(REPORT_FILE.into(), render_divergence(&divergence));
    Ok(PipelineOutput {
        files,
        manifest,
        divergence,
    })
}

/// Plain-text table: one row per task with WER and CER in percent.
pub fn render_divergence(rows: &[DivergenceRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16}{:<6}{:>8}{:>8}", "variant", "task", "WER", "CER");
    for row in rows {
        let variant = match row.mode.as_str() {
            "normalise" => "normalised",
            _ => "destandardised",
        };
        let _ = writeln!(
            out,
            "{:<16}{:<6}{:>8.2}{:>8.2}",
            variant,
            row.task.as_str(),
            row.report.wer,
            row.report.cer
        );
    }
    out
}

pub fn write_output(output: &PipelineOutput, out_dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut written = Vec::new();
    for (rel, content) in &output.files {
        let path = out_dir.join(rel);
        let werr = |source| PipelineError::Write {
            path: path.display().to_string(),
            source,
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(werr)?;
        }
        fs::write(&path, content).map_err(werr)?;
        written.push(rel.clone());
    }
    Ok(written)
}

/// Loads the config, plans the whole run, then writes it.
pub fn pipeline_run(config_path: &Path, overrides: &RunOverrides) -> Result<PipelineSummary, PipelineError> {
    let text = fs::read_to_string(config_path).map_err(|_| PipelineError::MissingInput {
        what: "config",
        path: config_path.display().to_string(),
    })?;
    let config = PipelineConfig::from_toml(&text)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let seed = overrides.seed.or(config.seed).unwrap_or(0);
    let out_dir = overrides
        .out_dir
        .clone()
        .unwrap_or_else(|| base.join(&config.out_dir));
    let output = plan_pipeline(&config, base, seed)?;
    let files = write_output(&output, &out_dir)?;
    Ok(PipelineSummary {
        out_dir: out_dir.display().to_string(),
        files,
        cells: output.manifest.cells.len(),
        evaluations: output.manifest.evaluation_count(),
        divergence: output.divergence,
    })
}
