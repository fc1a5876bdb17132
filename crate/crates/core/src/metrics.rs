//! Word/character error rates, weighted F1 and seed aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::transform::tokenize_line;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty reference")]
    EmptyReference,
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: gold has {gold} labels, prediction has {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("line count mismatch: reference has {reference} lines, hypothesis has {hypothesis}")]
    LineCountMismatch { reference: usize, hypothesis: usize },
    #[error("empty group")]
    EmptyGroup,
}

/// Unit-cost Levenshtein distance over arbitrary sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit operations of one minimal alignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    fn add(&mut self, other: EditCounts) {
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
    }
}

/// Minimal alignment of `hypothesis` against `reference`. Backtrace prefers
/// substitution, then deletion, then insertion among equal-cost paths.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut dp = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dp[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }
    let mut counts = EditCounts::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hypothesis[j - 1];
            if dp[i][j] == dp[i - 1][j - 1] + usize::from(!same) {
                if !same {
                    counts.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[i][j] == dp[i - 1][j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else {
            counts.insertions += 1;
            j -= 1;
        }
    }
    debug_assert_eq!(counts.total(), dp[n][m]);
    counts
}

/// Word-level result for one reference/hypothesis pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordErrors {
    pub edits: EditCounts,
    pub ref_tokens: usize,
}

impl WordErrors {
    /// Rate in percent.
    pub fn rate(&self) -> f64 {
        100.0 * self.edits.total() as f64 / self.ref_tokens as f64
    }
}

pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<WordErrors, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    Ok(WordErrors {
        edits: align(reference, hypothesis),
        ref_tokens: reference.len(),
    })
}

/// Character error rate in percent over Unicode scalar values, spaces
/// included.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64, MetricsError> {
    let r: Vec<char> = reference.chars().collect();
    if r.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h: Vec<char> = hypothesis.chars().collect();
    Ok(100.0 * levenshtein(&r, &h) as f64 / r.len() as f64)
}

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Total edits over total reference length.
    #[default]
    Micro,
    /// Mean of per-line rates over lines with a non-empty reference.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorRateOptions {
    pub averaging: Averaging,
    /// Drop punctuation/number tokens before computing WER.
    pub words_only: bool,
    /// Apply NFC to both sides before comparison.
    pub nfc: bool,
}

/// Splits a line into the units WER is computed over.
pub fn wer_tokens(line: &str, words_only: bool) -> Vec<String> {
    tokenize_line(line)
        .into_iter()
        .filter(|s| !s.surface.is_empty() && (s.is_word || !words_only))
        .map(|s| s.surface)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateReport {
    /// Percent.
    pub wer: f64,
    /// Percent.
    pub cer: f64,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub char_edits: usize,
    pub ref_token_count: usize,
    pub ref_char_count: usize,
    pub lines: usize,
}

/// Corpus error rates over line-aligned reference and hypothesis texts.
pub fn corpus_error_rates<R, H>(
    reference: &[R],
    hypothesis: &[H],
    options: ErrorRateOptions,
) -> Result<ErrorRateReport, MetricsError>
where
    R: AsRef<str>,
    H: AsRef<str>,
{
    if reference.len() != hypothesis.len() {
        return Err(MetricsError::LineCountMismatch {
            reference: reference.len(),
            hypothesis: hypothesis.len(),
        });
    }
    let prep = |s: &str| if options.nfc { nfc(s) } else { s.to_string() };

    let mut edits = EditCounts::default();
    let (mut ref_tokens, mut ref_chars, mut char_edits) = (0usize, 0usize, 0usize);
    let (mut wer_sum, mut cer_sum, mut wer_lines, mut cer_lines) = (0.0, 0.0, 0usize, 0usize);
    for (r, h) in reference.iter().zip(hypothesis) {
        let (r, h) = (prep(r.as_ref()), prep(h.as_ref()));
        let rt = wer_tokens(&r, options.words_only);
        let ht = wer_tokens(&h, options.words_only);
        let line_edits = align(&rt, &ht);
        edits.add(line_edits);
        ref_tokens += rt.len();
        if !rt.is_empty() {
            wer_sum += line_edits.total() as f64 / rt.len() as f64;
            wer_lines += 1;
        }

        let rc: Vec<char> = r.chars().collect();
        let hc: Vec<char> = h.chars().collect();
        let d = levenshtein(&rc, &hc);
        char_edits += d;
        ref_chars += rc.len();
        if !rc.is_empty() {
            cer_sum += d as f64 / rc.len() as f64;
            cer_lines += 1;
        }
    }
    if ref_tokens == 0 || ref_chars == 0 {
        return Err(MetricsError::EmptyReference);
    }
    let (wer, cer) = match options.averaging {
        Averaging::Micro => (
            100.0 * edits.total() as f64 / ref_tokens as f64,
            100.0 * char_edits as f64 / ref_chars as f64,
        ),
        Averaging::Macro => (
            100.0 * wer_sum / wer_lines as f64,
            100.0 * cer_sum / cer_lines as f64,
        ),
    };
    Ok(ErrorRateReport {
        wer,
        cer,
        substitutions: edits.substitutions,
        insertions: edits.insertions,
        deletions: edits.deletions,
        char_edits,
        ref_token_count: ref_tokens,
        ref_char_count: ref_chars,
        lines: reference.len(),
    })
}

/// Support-weighted mean of per-class F1, in percent.
pub fn weighted_f1<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<f64, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    // class -> (true positives, gold support, predicted count)
    let mut stats: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        stats.entry(g).or_default().1 += 1;
        stats.entry(p).or_default().2 += 1;
        if g == p {
            stats.entry(g).or_default().0 += 1;
        }
    }
    let n = gold.len() as f64;
    let score: f64 = stats
        .values()
        .map(|&(tp, support, predicted)| {
            let denom = support + predicted;
            let f1 = if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            };
            support as f64 / n * f1
        })
        .sum();
    Ok(100.0 * score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "std")]
    Std,
    #[serde(rename = "n-std")]
    NStd,
    #[serde(rename = "comb")]
    Comb,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Std, Variant::NStd, Variant::Comb];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Std => "std",
            Variant::NStd => "n-std",
            Variant::Comb => "comb",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "std" => Ok(Variant::Std),
            "n-std" => Ok(Variant::NStd),
            "comb" => Ok(Variant::Comb),
            other => Err(format!("unknown variant {other:?} (expected std, n-std or comb)")),
        }
    }
}

/// One fine-tuning outcome: a model trained on one variant, scored on one
/// test variant, under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRecord {
    pub task: String,
    pub train_variant: Variant,
    pub test_variant: Variant,
    pub seed: i64,
    pub weighted_f1: f64,
    #[serde(default = "default_model", skip_serializing_if = "is_default_model")]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_id: Option<String>,
}

pub const DEFAULT_MODEL: &str = "default";

impl ScoreRecord {
    /// Record for the default model without a cell id.
    pub fn new(task: impl Into<String>, train_variant: Variant, test_variant: Variant, seed: i64, weighted_f1: f64) -> Self {
        Self {
            task: task.into(),
            train_variant,
            test_variant,
            seed,
            weighted_f1,
            model: DEFAULT_MODEL.to_string(),
            cell_id: None,
        }
    }
}

fn default_model() -> String {
    DEFAULT_MODEL.to_string()
}

fn is_default_model(m: &str) -> bool {
    m == DEFAULT_MODEL
}

/// Mean and sample standard deviation of one result cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl fmt::Display for CellStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

pub fn mean_std(values: &[f64]) -> Result<CellStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    // sort for summation order independence
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = if n == 1 {
        0.0
    } else {
        let mut sq: Vec<f64> = sorted.iter().map(|v| (v - mean).powi(2)).collect();
        sq.sort_by(f64::total_cmp);
        (sq.iter().sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(CellStats { mean, std, n })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub model: String,
    pub task: String,
    pub train_variant: Variant,
    pub test_variant: Variant,
}

impl CellKey {
    pub fn of(record: &ScoreRecord) -> Self {
        Self {
            model: record.model.clone(),
            task: record.task.clone(),
            train_variant: record.train_variant,
            test_variant: record.test_variant,
        }
    }
}

/// Groups records by (model, task, train variant, test variant) and reduces
/// each group to mean ± sample std.
pub fn aggregate(records: &[ScoreRecord]) -> BTreeMap<CellKey, CellStats> {
    let mut groups: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(CellKey::of(r)).or_default().push(r.weighted_f1);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, mean_std(&v).expect("groups are non-empty")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wer_examples() {
        let r = ["de", "Mann", "ass", "grouss"];
        assert_eq!(wer(&r, &r).unwrap().rate(), 0.0);
        let w = wer(&r, &["den", "Mann", "as", "grous"]).unwrap();
        assert_eq!(w.edits.substitutions, 3);
        assert!(close(w.rate(), 75.0, 1e-12));
        let w = wer(&["a", "b"], &["a"]).unwrap();
        assert_eq!(w.edits.deletions, 1);
        assert!(close(w.rate(), 50.0, 1e-12));
        assert_eq!(wer::<&str>(&[], &["a"]).unwrap_err(), MetricsError::EmptyReference);
    }

    #[test]
    fn cer_examples() {
        assert!(close(cer("ass", "as").unwrap(), 100.0 / 3.0, 1e-12));
        assert_eq!(cer("ass", "ass").unwrap(), 0.0);
        assert_eq!(cer("ab", "ba").unwrap(), 100.0);
        assert!(cer("", "x").is_err());
    }

    #[test]
    fn corpus_rates_are_micro_averaged() {
        let reference = ["a b", "c d"];
        let hypothesis = ["a x", "c d"];
        let rep = corpus_error_rates(&reference, &hypothesis, ErrorRateOptions::default()).unwrap();
        assert!(close(rep.wer, 25.0, 1e-12));
        let opts = ErrorRateOptions {
            averaging: Averaging::Macro,
            ..Default::default()
        };
        let rep = corpus_error_rates(&reference, &hypothesis, opts).unwrap();
        assert!(close(rep.wer, 25.0, 1e-12));
        let rep = corpus_error_rates(&["a b c d"], &["a x"], opts).unwrap();
        assert!(close(rep.wer, 75.0, 1e-12));
    }

    #[test]
    fn corpus_identity_and_mismatch() {
        let lines = ["de Mann.", "ass grouss"];
        let rep = corpus_error_rates(&lines, &lines, ErrorRateOptions::default()).unwrap();
        assert_eq!((rep.wer, rep.cer), (0.0, 0.0));
        assert_eq!(rep.ref_token_count, 5);
        let err = corpus_error_rates(&lines, &lines[..1], ErrorRateOptions::default()).unwrap_err();
        assert_eq!(
            err.to_string(),
            "line count mismatch: reference has 2 lines, hypothesis has 1"
        );
    }

    #[test]
    fn words_only_drops_punctuation() {
        let opts = ErrorRateOptions {
            words_only: true,
            ..Default::default()
        };
        let rep = corpus_error_rates(&["a, b."], &["a; b!"], opts).unwrap();
        assert_eq!(rep.wer, 0.0);
        let rep = corpus_error_rates(&["a, b."], &["a; b!"], ErrorRateOptions::default()).unwrap();
        assert!(close(rep.wer, 50.0, 1e-12));
    }

    #[test]
    fn nfc_flag_unifies_composed_forms() {
        let composed = "\u{eb}";
        let decomposed = "e\u{308}";
        let plain = corpus_error_rates(&[composed], &[decomposed], ErrorRateOptions::default()).unwrap();
        assert!(plain.cer > 0.0);
        let opts = ErrorRateOptions {
            nfc: true,
            ..Default::default()
        };
        let rep = corpus_error_rates(&[composed], &[decomposed], opts).unwrap();
        assert_eq!(rep.cer, 0.0);
    }

    #[test]
    fn weighted_f1_examples() {
        let f = weighted_f1(&["A", "A", "B", "B"], &["A", "B", "B", "B"]).unwrap();
        assert!(close(f, 100.0 * (0.5 * 2.0 / 3.0 + 0.5 * 0.8), 1e-12));
        assert_eq!(format!("{f:.2}"), "73.33");
        assert_eq!(weighted_f1(&["A", "B"], &["A", "B"]).unwrap(), 100.0);
        assert_eq!(weighted_f1(&["A", "A"], &["B", "B"]).unwrap(), 0.0);
        assert!(matches!(
            weighted_f1(&["A"], &["A", "B"]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert_eq!(weighted_f1::<&str>(&[], &[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn aggregate_examples() {
        let s = mean_std(&[60.0; 5]).unwrap();
        assert_eq!((s.mean, s.std), (60.0, 0.0));
        let s = mean_std(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert!(close(s.std, 2.5f64.sqrt(), 1e-12));
        assert_eq!(format!("{:.4}", s.std), "1.5811");
        let s = CellStats {
            mean: 68.56,
            std: 1.05,
            n: 5,
        };
        assert_eq!(s.to_string(), "68.56 ± 1.05");
        assert_eq!(mean_std(&[42.0]).unwrap().std, 0.0);
        assert_eq!(mean_std(&[]), Err(MetricsError::EmptyGroup));
    }

    #[test]
    fn score_record_schema() {
        let line = r#"{"task":"IC","train_variant":"comb","test_variant":"n-std","seed":3,"weighted_f1":65.8}"#;
        let r: ScoreRecord = serde_json::from_str(line).unwrap();
        assert_eq!(r.train_variant, Variant::Comb);
        assert_eq!(r.model, DEFAULT_MODEL);
        assert_eq!(serde_json::to_string(&r).unwrap(), line);
        let extra = r#"{"task":"IC","train_variant":"std","test_variant":"std","seed":1,"weighted_f1":1,"bogus":1}"#;
        assert!(serde_json::from_str::<ScoreRecord>(extra).is_err());
    }
}
