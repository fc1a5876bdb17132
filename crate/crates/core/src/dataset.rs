//! Classification datasets and their standard / non-standard / combined
//! variants.
//!
//! Sequence and pair tasks are stored as JSONL (`{"id","text","label"}` or
//! `{"id","text_a","text_b","label"}`); token tasks as two-column CoNLL
//! (`token<TAB>tag`, blank line between sentences, optional `# id = …`
//! comment before each sentence).

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::lexicon::VariantLexicon;
use crate::metrics::Variant;
use crate::transform::{mix64, transform_text, transform_tokens, Mode, TransformPlan};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId { path: String, line: usize, id: String },
    #[error("record {id:?}: {reason}")]
    Alignment { id: String, reason: String },
    #[error("{0}")]
    Incompatible(String),
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    IC,
    NER,
    POS,
    WNLI,
    TC,
    SC,
    CM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Sequence,
    Pair,
    Token,
}

impl Task {
    pub const ALL: [Task; 7] = [
        Task::IC,
        Task::NER,
        Task::POS,
        Task::WNLI,
        Task::TC,
        Task::SC,
        Task::CM,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::IC => "IC",
            Task::NER => "NER",
            Task::POS => "POS",
            Task::WNLI => "WNLI",
            Task::TC => "TC",
            Task::SC => "SC",
            Task::CM => "CM",
        }
    }

    pub fn kind(&self) -> RecordKind {
        match self {
            Task::NER | Task::POS => RecordKind::Token,
            Task::WNLI => RecordKind::Pair,
            Task::IC | Task::TC | Task::SC | Task::CM => RecordKind::Sequence,
        }
    }

    /// The variant the raw data is written in. Comment-based tasks are
    /// non-standard and get normalised; the rest get destandardised.
    pub fn native_variant(&self) -> Variant {
        match self {
            Task::SC | Task::CM => Variant::NStd,
            _ => Variant::Std,
        }
    }

    pub fn derivation_mode(&self) -> Mode {
        match self.native_variant() {
            Variant::NStd => Mode::Normalise,
            _ => Mode::Destandardise,
        }
    }

    pub fn file_extension(&self) -> &'static str {
        match self.kind() {
            RecordKind::Token => "conll",
            _ => "jsonl",
        }
    }

    /// Published train/dev/test record counts of the Luxembourgish datasets.
    pub fn reference_split_sizes(&self) -> [usize; 3] {
        match self {
            Task::IC => [698, 149, 159],
            Task::NER => [4298, 459, 770],
            Task::POS => [4278, 460, 388],
            Task::WNLI => [568, 63, 136],
            Task::CM => [6000, 1000, 2000],
            Task::SC => [1299, 185, 364],
            Task::TC => [701, 99, 204],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    fn index(&self) -> usize {
        match self {
            Split::Train => 0,
            Split::Dev => 1,
            Split::Test => 2,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown split {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordBody {
    Sequence { text: String, label: String },
    Pair { text_a: String, text_b: String, label: String },
    Token { tokens: Vec<String>, labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub body: RecordBody,
}

impl Record {
    pub fn sequence(id: impl Into<String>, text: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            body: RecordBody::Sequence {
                text: text.into(),
                label: label.into(),
            },
        }
    }

    pub fn pair(
        id: impl Into<String>,
        text_a: impl Into<String>,
        text_b: impl Into<String>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            body: RecordBody::Pair {
                text_a: text_a.into(),
                text_b: text_b.into(),
                label: label.into(),
            },
        }
    }

    pub fn token(id: impl Into<String>, tokens: Vec<String>, labels: Vec<String>) -> Self {
        Self {
            id: id.into(),
            body: RecordBody::Token { tokens, labels },
        }
    }

    pub fn kind(&self) -> RecordKind {
        match self.body {
            RecordBody::Sequence { .. } => RecordKind::Sequence,
            RecordBody::Pair { .. } => RecordKind::Pair,
            RecordBody::Token { .. } => RecordKind::Token,
        }
    }

    pub fn labels(&self) -> Vec<&str> {
        match &self.body {
            RecordBody::Sequence { label, .. } | RecordBody::Pair { label, .. } => vec![label],
            RecordBody::Token { labels, .. } => labels.iter().map(String::as_str).collect(),
        }
    }

    /// Text lines of the record, for divergence measurement.
    pub fn text_lines(&self) -> Vec<String> {
        match &self.body {
            RecordBody::Sequence { text, .. } => text.split('\n').map(str::to_string).collect(),
            RecordBody::Pair { text_a, text_b, .. } => text_a
                .split('\n')
                .chain(text_b.split('\n'))
                .map(str::to_string)
                .collect(),
            RecordBody::Token { tokens, .. } => vec![tokens.join(" ")],
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let fail = |reason: &str| {
            Err(DatasetError::Alignment {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() {
            return fail("empty id");
        }
        match &self.body {
            RecordBody::Sequence { text, label } => {
                if text.is_empty() || label.is_empty() {
                    return fail("empty text field");
                }
            }
            RecordBody::Pair {
                text_a,
                text_b,
                label,
            } => {
                if text_a.is_empty() || text_b.is_empty() || label.is_empty() {
                    return fail("empty text field");
                }
            }
            RecordBody::Token { tokens, labels } => {
                if tokens.is_empty() {
                    return fail("no tokens");
                }
                if tokens.len() != labels.len() {
                    return fail(&format!(
                        "{} tokens but {} labels",
                        tokens.len(),
                        labels.len()
                    ));
                }
                if tokens.iter().chain(labels).any(|t| t.is_empty()) {
                    return fail("empty token or label");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub task: Task,
    pub split: Split,
    pub variant: Variant,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(task: Task, split: Split, variant: Variant, records: Vec<Record>) -> Result<Self, DatasetError> {
        let ds = Self {
            task,
            split,
            variant,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if r.kind() != self.task.kind() {
                return Err(DatasetError::Incompatible(format!(
                    "record {:?} is not a valid {} record",
                    r.id, self.task
                )));
            }
            r.validate()?;
            if !seen.insert(r.id.as_str()) {
                return Err(DatasetError::Alignment {
                    id: r.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
        }
        Ok(())
    }

    /// Label multiset, for label-immutability checks.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            for l in r.labels() {
                *counts.entry(l.to_string()).or_default() += 1;
            }
        }
        counts
    }

    pub fn text_lines(&self) -> Vec<String> {
        self.records.iter().flat_map(Record::text_lines).collect()
    }
}

/// `<root>/<TASK>/<variant>/<split>.<ext>`
pub fn dataset_path(root: &Path, task: Task, variant: Variant, split: Split) -> PathBuf {
    root.join(task.as_str())
        .join(variant.as_str())
        .join(format!("{}.{}", split, task.file_extension()))
}

pub fn read_dataset(path: &Path, task: Task, split: Split, variant: Variant) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text, &path.display().to_string(), task, split, variant)
}

/// Parses dataset text; `origin` only labels error messages.
pub fn parse_dataset(
    text: &str,
    origin: &str,
    task: Task,
    split: Split,
    variant: Variant,
) -> Result<Dataset, DatasetError> {
    let records = match task.kind() {
        RecordKind::Token => parse_conll(text, origin)?,
        kind => parse_jsonl(text, origin, kind)?,
    };
    Dataset::new(task, split, variant, records)
}

fn malformed(origin: &str, line: usize, reason: impl Into<String>) -> DatasetError {
    DatasetError::Malformed {
        path: origin.to_string(),
        line,
        reason: reason.into(),
    }
}

fn check_unique(
    seen: &mut HashSet<String>,
    id: &str,
    origin: &str,
    line: usize,
) -> Result<(), DatasetError> {
    if seen.insert(id.to_string()) {
        Ok(())
    } else {
        Err(DatasetError::DuplicateId {
            path: origin.to_string(),
            line,
            id: id.to_string(),
        })
    }
}

fn parse_jsonl(text: &str, origin: &str, kind: RecordKind) -> Result<Vec<Record>, DatasetError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| malformed(origin, lineno, format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed(origin, lineno, "expected a JSON object"))?;
        let expected: &[&str] = match kind {
            RecordKind::Pair => &["id", "text_a", "text_b", "label"],
            _ => &["id", "text", "label"],
        };
        if let Some(extra) = obj.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(malformed(origin, lineno, format!("unexpected field {extra:?}")));
        }
        let field = |name: &str| -> Result<String, DatasetError> {
            match obj.get(name) {
                None => Err(malformed(origin, lineno, format!("missing field {name:?}"))),
                Some(Value::String(s)) if s.is_empty() => {
                    Err(malformed(origin, lineno, format!("empty field {name:?}")))
                }
                Some(Value::String(s)) => Ok(s.clone()),
                // integer labels and ids are common in the wild (e.g. WNLI 0/1)
                Some(Value::Number(n)) if name == "label" || name == "id" => Ok(n.to_string()),
                Some(_) => Err(malformed(origin, lineno, format!("field {name:?} must be a string"))),
            }
        };
        let id = field("id")?;
        check_unique(&mut seen, &id, origin, lineno)?;
        let record = match kind {
            RecordKind::Pair => Record::pair(id, field("text_a")?, field("text_b")?, field("label")?),
            _ => Record::sequence(id, field("text")?, field("label")?),
        };
        records.push(record);
    }
    Ok(records)
}

fn parse_conll(text: &str, origin: &str) -> Result<Vec<Record>, DatasetError> {
    struct Pending {
        id: Option<String>,
        start_line: usize,
        tokens: Vec<String>,
        labels: Vec<String>,
    }
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut pending: Option<Pending> = None;

    let mut flush = |pending: &mut Option<Pending>, records: &mut Vec<Record>| -> Result<(), DatasetError> {
        if let Some(p) = pending.take() {
            if p.tokens.is_empty() {
                return Err(malformed(origin, p.start_line, "sentence has no tokens"));
            }
            let id = p.id.unwrap_or_else(|| (records.len() + 1).to_string());
            check_unique(&mut seen, &id, origin, p.start_line)?;
            records.push(Record::token(id, p.tokens, p.labels));
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            flush(&mut pending, &mut records)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim_start().strip_prefix("id = ") {
                if pending.as_ref().is_some_and(|p| !p.tokens.is_empty()) {
                    flush(&mut pending, &mut records)?;
                }
                let p = pending.get_or_insert_with(|| Pending {
                    id: None,
                    start_line: lineno,
                    tokens: vec![],
                    labels: vec![],
                });
                p.id = Some(id.to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [token, tag] = cols[..] else {
            return Err(malformed(
                origin,
                lineno,
                format!("expected token<TAB>tag, found {} columns", cols.len()),
            ));
        };
        if token.is_empty() || tag.is_empty() {
            return Err(malformed(origin, lineno, "empty token or tag"));
        }
        let p = pending.get_or_insert_with(|| Pending {
            id: None,
            start_line: lineno,
            tokens: vec![],
            labels: vec![],
        });
        p.tokens.push(token.to_string());
        p.labels.push(tag.to_string());
    }
    flush(&mut pending, &mut records)?;
    Ok(records)
}

#[derive(Serialize)]
struct SequenceRow<'a> {
    id: &'a str,
    text: &'a str,
    label: &'a str,
}

#[derive(Serialize)]
struct PairRow<'a> {
    id: &'a str,
    text_a: &'a str,
    text_b: &'a str,
    label: &'a str,
}

/// Canonical text form of a dataset; LF line endings, byte-stable.
pub fn render_dataset(ds: &Dataset) -> String {
    let mut out = String::new();
    for r in &ds.records {
        match &r.body {
            RecordBody::Sequence { text, label } => {
                let row = SequenceRow {
                    id: &r.id,
                    text,
                    label,
                };
                out.push_str(&serde_json::to_string(&row).expect("serialisable"));
                out.push('\n');
            }
            RecordBody::Pair {
                text_a,
                text_b,
                label,
            } => {
                let row = PairRow {
                    id: &r.id,
                    text_a,
                    text_b,
                    label,
                };
                out.push_str(&serde_json::to_string(&row).expect("serialisable"));
                out.push('\n');
            }
            RecordBody::Token { tokens, labels } => {
                let _ = writeln!(out, "# id = {}", r.id);
                for (t, l) in tokens.iter().zip(labels) {
                    let _ = writeln!(out, "{t}\t{l}");
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    fs::write(path, render_dataset(ds)).map_err(io_err)
}

/// Site line index of line `line` in field `field` of record `record`.
fn record_site(record: usize, field: u64, line: u64) -> u64 {
    mix64(&[record as u64, field, line])
}

fn transform_field(text: &str, lexicon: &VariantLexicon, plan: &TransformPlan, record: usize, field: u64) -> String {
    text.split('\n')
        .enumerate()
        .map(|(l, line)| transform_text(line, lexicon, plan, record_site(record, field, l as u64)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Applies the plan to every record. Labels and ids are untouched; the variant
/// becomes `n-std` after destandardising and `std` after normalising.
///
/// Unless `force` is set, the mode must match the task's direction
/// (destandardise standard-native tasks, normalise non-standard-native ones)
/// and the dataset must hold the task's native variant.
pub fn transform_dataset(
    ds: &Dataset,
    lexicon: &VariantLexicon,
    plan: &TransformPlan,
    force: bool,
) -> Result<Dataset, DatasetError> {
    if !force {
        if plan.mode != ds.task.derivation_mode() {
            return Err(DatasetError::Incompatible(format!(
                "{} data is derived by {}, not {} (use force to override)",
                ds.task,
                ds.task.derivation_mode(),
                plan.mode
            )));
        }
        if ds.variant != ds.task.native_variant() {
            return Err(DatasetError::Incompatible(format!(
                "{} expects {} input, got {}",
                plan.mode,
                ds.task.native_variant(),
                ds.variant
            )));
        }
    }
    let mut records = Vec::with_capacity(ds.records.len());
    for (i, r) in ds.records.iter().enumerate() {
        let body = match &r.body {
            RecordBody::Sequence { text, label } => RecordBody::Sequence {
                text: transform_field(text, lexicon, plan, i, 0),
                label: label.clone(),
            },
            RecordBody::Pair {
                text_a,
                text_b,
                label,
            } => RecordBody::Pair {
                text_a: transform_field(text_a, lexicon, plan, i, 0),
                text_b: transform_field(text_b, lexicon, plan, i, 1),
                label: label.clone(),
            },
            RecordBody::Token { tokens, labels } => {
                let out = transform_tokens(tokens, lexicon, plan, record_site(i, 0, 0));
                if out.len() != labels.len() || out.iter().any(String::is_empty) {
                    return Err(DatasetError::Invariant(format!(
                        "record {:?}: token alignment lost during transform",
                        r.id
                    )));
                }
                RecordBody::Token {
                    tokens: out,
                    labels: labels.clone(),
                }
            }
        };
        records.push(Record {
            id: r.id.clone(),
            body,
        });
    }
    let variant = match plan.mode {
        Mode::Destandardise => Variant::NStd,
        Mode::Normalise => Variant::Std,
    };
    Ok(Dataset {
        task: ds.task,
        split: ds.split,
        variant,
        records,
    })
}

pub const NSTD_ID_SUFFIX: &str = "#nstd";

/// Concatenates the standard and non-standard versions of one split, standard
/// block first. Non-standard ids get the `#nstd` suffix.
pub fn combine(std: &Dataset, nstd: &Dataset) -> Result<Dataset, DatasetError> {
    if std.task != nstd.task || std.split != nstd.split {
        return Err(DatasetError::Incompatible(format!(
            "cannot combine {}/{} with {}/{}",
            std.task, std.split, nstd.task, nstd.split
        )));
    }
    if std.variant != Variant::Std || nstd.variant != Variant::NStd {
        return Err(DatasetError::Incompatible(format!(
            "combine expects std + n-std, got {} + {}",
            std.variant, nstd.variant
        )));
    }
    if std.len() != nstd.len() {
        return Err(DatasetError::Incompatible(format!(
            "record counts differ: {} vs {}",
            std.len(),
            nstd.len()
        )));
    }
    if let Some((a, b)) = std.records.iter().zip(&nstd.records).find(|(a, b)| a.id != b.id) {
        return Err(DatasetError::Incompatible(format!(
            "id mismatch: {:?} vs {:?}",
            a.id, b.id
        )));
    }
    let records = std
        .records
        .iter()
        .cloned()
        .chain(nstd.records.iter().map(|r| Record {
            id: format!("{}{NSTD_ID_SUFFIX}", r.id),
            body: r.body.clone(),
        }))
        .collect();
    Dataset::new(std.task, std.split, Variant::Comb, records)
}

/// Record counts per split found under a dataset tree, next to the published
/// reference counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitStats {
    pub task: Task,
    pub variant: Variant,
    pub counts: [Option<usize>; 3],
    pub reference: [usize; 3],
}

impl SplitStats {
    pub fn matches_reference(&self) -> bool {
        self.counts
            .iter()
            .zip(self.reference)
            .all(|(c, r)| *c == Some(r))
    }
}

pub fn dataset_stats(root: &Path, task: Task, variant: Variant) -> Result<SplitStats, DatasetError> {
    let mut counts = [None; 3];
    for split in Split::ALL {
        let path = dataset_path(root, task, variant, split);
        if path.exists() {
            counts[split.index()] = Some(read_dataset(&path, task, split, variant)?.len());
        }
    }
    Ok(SplitStats {
        task,
        variant,
        counts,
        reference: task.reference_split_sizes(),
    })
}
