//! Experiment grid: which model is fine-tuned on which task variant under
//! which seed, and the 3×3 train × test result matrices built from the
//! harness's results file.
//!
//! The experiment config is TOML:
//!
//! ```toml
//! results = "results.jsonl"
//! models = ["tiny-encoder"]
//! seeds = [1, 2, 3, 4, 5]          # optional
//! data_root = "datasets"           # optional, relative to the config file
//!
//! [[tasks]]
//! id = "TC"
//! # batch_size / learning_rate / epochs default to the task's standard
//! # settings; data_dir defaults to <data_root>/<id>
//! ```
//!
//! Dataset files are looked up as `<data_dir>/<variant>/<split>.<ext>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{RecordKind, Split, Task};
use crate::metrics::{aggregate, CellKey, CellStats, ScoreRecord, Variant};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown task id {0:?}")]
    UnknownTask(String),
    #[error("task {task}: missing {variant} {split} dataset at {path}")]
    MissingDataset {
        task: Task,
        variant: Variant,
        split: Split,
        path: String,
    },
    #[error("results line {line}: {reason}")]
    Schema { line: usize, reason: String },
    #[error("results line {line}: duplicate record for {key}")]
    Duplicate { line: usize, key: String },
    #[error("incomplete grid for {model}/{task}: missing {missing:?}")]
    IncompleteGrid {
        model: String,
        task: String,
        missing: Vec<String>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Fine-tuning settings of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub batch_size: u32,
    pub learning_rate: f64,
    pub epochs: u32,
}

impl Hyperparameters {
    pub fn default_for(task: Task) -> Self {
        Self {
            batch_size: 16,
            learning_rate: if task == Task::TC { 2e-5 } else { 5e-5 },
            epochs: if matches!(task, Task::NER | Task::POS) { 3 } else { 5 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPaths {
    pub train: String,
    pub dev: String,
    pub test: String,
}

impl SplitPaths {
    pub fn get(&self, split: Split) -> &str {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: Task,
    pub kind: String,
    #[serde(flatten)]
    pub hyperparameters: Hyperparameters,
    /// Dataset files per variant (`std`, `n-std`, `comb`).
    pub data: BTreeMap<Variant, SplitPaths>,
}

/// One training run; the harness evaluates it on every test variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub model: String,
    pub task: Task,
    pub train_variant: Variant,
    pub seed: i64,
}

impl Cell {
    pub fn make_id(model: &str, task: Task, train_variant: Variant, seed: i64) -> String {
        format!("{model}/{task}/{train_variant}/s{seed}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub results: String,
    pub models: Vec<String>,
    pub seeds: Vec<i64>,
    pub train_variants: Vec<Variant>,
    pub test_variants: Vec<Variant>,
    pub tasks: Vec<TaskSpec>,
    pub cells: Vec<Cell>,
}

impl ExperimentManifest {
    pub fn evaluation_count(&self) -> usize {
        self.cells.len() * self.test_variants.len()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is serialisable")
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub id: String,
    pub batch_size: Option<u32>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<u32>,
    pub data_dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub results: String,
    pub models: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<i64>,
    #[serde(default = "all_variants")]
    pub train_variants: Vec<Variant>,
    #[serde(default)]
    pub data_root: Option<String>,
    pub tasks: Vec<TaskConfig>,
}

fn default_seeds() -> Vec<i64> {
    vec![1, 2, 3, 4, 5]
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

fn kind_name(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::Sequence => "sequence",
        RecordKind::Pair => "pair",
        RecordKind::Token => "token",
    }
}

fn join_rel(dir: &str, tail: &str) -> String {
    if dir.is_empty() {
        tail.to_string()
    } else {
        format!("{}/{tail}", dir.trim_end_matches('/'))
    }
}

/// Expands a config into the full grid. Relative paths are resolved against
/// `base_dir` for existence checks but stored as written.
pub fn build_manifest_from_config(
    config: &ExperimentConfig,
    base_dir: &Path,
) -> Result<ExperimentManifest, ExperimentError> {
    expand_manifest(config, |p| base_dir.join(p).is_file())
}

/// Expands a config into the full grid; `exists` decides whether a dataset
/// path (as written in the manifest) is available.
pub fn expand_manifest(
    config: &ExperimentConfig,
    exists: impl Fn(&str) -> bool,
) -> Result<ExperimentManifest, ExperimentError> {
    if config.models.is_empty() {
        return Err(ExperimentError::Config("no models listed".into()));
    }
    if config.seeds.is_empty() {
        return Err(ExperimentError::Config("no seeds listed".into()));
    }
    if config.tasks.is_empty() {
        return Err(ExperimentError::Config("no tasks listed".into()));
    }
    let mut seen_tasks = BTreeSet::new();
    let mut tasks = Vec::new();
    for tc in &config.tasks {
        let id: Task = tc
            .id
            .parse()
            .map_err(|_| ExperimentError::UnknownTask(tc.id.clone()))?;
        if !seen_tasks.insert(id) {
            return Err(ExperimentError::Config(format!("task {id} listed twice")));
        }
        let defaults = Hyperparameters::default_for(id);
        let hyperparameters = Hyperparameters {
            batch_size: tc.batch_size.unwrap_or(defaults.batch_size),
            learning_rate: tc.learning_rate.unwrap_or(defaults.learning_rate),
            epochs: tc.epochs.unwrap_or(defaults.epochs),
        };
        if hyperparameters.batch_size == 0 || hyperparameters.epochs == 0 || hyperparameters.learning_rate <= 0.0 {
            return Err(ExperimentError::Config(format!("task {id}: hyperparameters must be positive")));
        }
        let data_dir = tc.data_dir.clone().unwrap_or_else(|| {
            join_rel(config.data_root.as_deref().unwrap_or(""), id.as_str())
        });
        let mut data = BTreeMap::new();
        for variant in Variant::ALL {
            let path_of = |split: Split| {
                join_rel(
                    &join_rel(&data_dir, variant.as_str()),
                    &format!("{split}.{}", id.file_extension()),
                )
            };
            let paths = SplitPaths {
                train: path_of(Split::Train),
                dev: path_of(Split::Dev),
                test: path_of(Split::Test),
            };
            for split in Split::ALL {
                let p = paths.get(split);
                if !exists(p) {
                    return Err(ExperimentError::MissingDataset {
                        task: id,
                        variant,
                        split,
                        path: p.to_string(),
                    });
                }
            }
            data.insert(variant, paths);
        }
        tasks.push(TaskSpec {
            id,
            kind: kind_name(id.kind()).to_string(),
            hyperparameters,
            data,
        });
    }

    let mut cells = Vec::new();
    for model in &config.models {
        for task in &tasks {
            for &train_variant in &config.train_variants {
                for &seed in &config.seeds {
                    cells.push(Cell {
                        id: Cell::make_id(model, task.id, train_variant, seed),
                        model: model.clone(),
                        task: task.id,
                        train_variant,
                        seed,
                    });
                }
            }
        }
    }
    Ok(ExperimentManifest {
        results: config.results.clone(),
        models: config.models.clone(),
        seeds: config.seeds.clone(),
        train_variants: config.train_variants.clone(),
        test_variants: Variant::ALL.to_vec(),
        tasks,
        cells,
    })
}

pub fn build_manifest(config_path: &Path) -> Result<ExperimentManifest, ExperimentError> {
    let text = fs::read_to_string(config_path).map_err(|source| ExperimentError::Io {
        path: config_path.display().to_string(),
        source,
    })?;
    let config = ExperimentConfig::from_toml(&text)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    build_manifest_from_config(&config, base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectedResults {
    pub records: Vec<ScoreRecord>,
    pub warnings: Vec<String>,
}

/// Validates a results JSONL text. Duplicate (model, task, variants, seed)
/// rows are errors; missing seeds or cells are warnings. Expected seeds come
/// from the manifest when given, otherwise from every seed seen in the file.
pub fn collect_results(
    text: &str,
    manifest: Option<&ExperimentManifest>,
) -> Result<CollectedResults, ExperimentError> {
    let mut records = Vec::new();
    let mut seen: HashMap<(CellKey, i64), usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: ScoreRecord = serde_json::from_str(line).map_err(|e| ExperimentError::Schema {
            line: lineno,
            reason: e.to_string(),
        })?;
        if record.task.parse::<Task>().is_err() {
            return Err(ExperimentError::Schema {
                line: lineno,
                reason: format!("unknown task {:?}", record.task),
            });
        }
        if !(0.0..=100.0).contains(&record.weighted_f1) {
            return Err(ExperimentError::Schema {
                line: lineno,
                reason: format!("weighted_f1 {} outside [0, 100]", record.weighted_f1),
            });
        }
        let key = (CellKey::of(&record), record.seed);
        if let Some(first) = seen.insert(key, lineno) {
            return Err(ExperimentError::Duplicate {
                line: lineno,
                key: format!(
                    "{}/{} {}→{} seed {} (first on line {first})",
                    record.model, record.task, record.train_variant, record.test_variant, record.seed
                ),
            });
        }
        records.push(record);
    }

    let mut by_cell: BTreeMap<CellKey, BTreeSet<i64>> = BTreeMap::new();
    for r in &records {
        by_cell.entry(CellKey::of(r)).or_default().insert(r.seed);
    }
    let mut warnings = Vec::new();
    let expected_seeds: BTreeSet<i64> = match manifest {
        Some(m) => m.seeds.iter().copied().collect(),
        None => records.iter().map(|r| r.seed).collect(),
    };
    if let Some(m) = manifest {
        for cell in &m.cells {
            for &test_variant in &m.test_variants {
                let key = CellKey {
                    model: cell.model.clone(),
                    task: cell.task.to_string(),
                    train_variant: cell.train_variant,
                    test_variant,
                };
                by_cell.entry(key).or_default();
            }
        }
    }
    for (key, seeds) in &by_cell {
        let missing: Vec<i64> = expected_seeds.difference(seeds).copied().collect();
        if !missing.is_empty() {
            warnings.push(format!(
                "{}/{} {}→{}: missing seeds {:?}",
                key.model, key.task, key.train_variant, key.test_variant, missing
            ));
        }
    }
    Ok(CollectedResults { records, warnings })
}

pub fn read_results(path: &Path, manifest: Option<&ExperimentManifest>) -> Result<CollectedResults, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    collect_results(&text, manifest)
}

/// Train variant (rows) × test variant (columns) of mean ± std scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultMatrix {
    pub model: String,
    pub task: String,
    pub rows: Vec<MatrixRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRow {
    pub train_variant: Variant,
    pub cells: Vec<MatrixCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCell {
    pub test_variant: Variant,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub text: String,
}

impl ResultMatrix {
    pub fn cell(&self, train: Variant, test: Variant) -> Option<&MatrixCell> {
        self.rows
            .iter()
            .find(|r| r.train_variant == train)?
            .cells
            .iter()
            .find(|c| c.test_variant == test)
    }

    pub fn to_text(&self) -> String {
        const WIDTH: usize = 15;
        let mut out = String::new();
        let _ = writeln!(out, "{} – Weighted F1 (± std) [{}]", self.task, self.model);
        let _ = write!(out, "{:<8}", "train");
        for v in Variant::ALL {
            let _ = write!(out, "{:<WIDTH$}", v.as_str());
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<8}", row.train_variant.as_str());
            for c in &row.cells {
                let _ = write!(out, "{:<WIDTH$}", c.text);
            }
            out.truncate(out.trim_end().len());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }
}

/// Builds the full 3×3 matrix for one (model, task). Fails when any cell has
/// no records.
pub fn render_matrix(records: &[ScoreRecord], model: &str, task: &str) -> Result<ResultMatrix, ExperimentError> {
    let relevant: Vec<ScoreRecord> = records
        .iter()
        .filter(|r| r.model == model && r.task == task)
        .cloned()
        .collect();
    let stats = aggregate(&relevant);
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    for train in Variant::ALL {
        let mut cells = Vec::new();
        for test in Variant::ALL {
            let key = CellKey {
                model: model.to_string(),
                task: task.to_string(),
                train_variant: train,
                test_variant: test,
            };
            match stats.get(&key) {
                Some(s) => cells.push(matrix_cell(test, s)),
                None => missing.push(format!("{train}→{test}")),
            }
        }
        rows.push(MatrixRow {
            train_variant: train,
            cells,
        });
    }
    if !missing.is_empty() {
        return Err(ExperimentError::IncompleteGrid {
            model: model.to_string(),
            task: task.to_string(),
            missing,
        });
    }
    Ok(ResultMatrix {
        model: model.to_string(),
        task: task.to_string(),
        rows,
    })
}

fn matrix_cell(test_variant: Variant, s: &CellStats) -> MatrixCell {
    MatrixCell {
        test_variant,
        mean: s.mean,
        std: s.std,
        n: s.n,
        text: s.to_string(),
    }
}

/// Every complete (model, task) matrix in the records, in sorted order.
pub fn render_all(records: &[ScoreRecord]) -> Vec<Result<ResultMatrix, ExperimentError>> {
    let pairs: BTreeSet<(String, String)> = records
        .iter()
        .map(|r| (r.model.clone(), r.task.clone()))
        .collect();
    pairs
        .into_iter()
        .map(|(model, task)| render_matrix(records, &model, &task))
        .collect()
}
