//! Frequency-weighted spelling-variant lexicon.
//!
//! A [`VariantLexicon`] maps every standard form to the surfaces users wrote
//! for it, weighted by how often each surface was corrected to that form. The
//! standard form always appears among its own variants so that destandardising
//! can leave a word untouched.
//!
//! Correction logs are UTF-8 TSV with two columns, `observed<TAB>corrected`;
//! lines starting with `#` and blank lines are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::transform::is_single_word;

const FORMAT_TAG: &str = "varlex";
const FORMAT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("empty correction log")]
    EmptyLog,
    #[error("row {row}: expected 2 tab-separated columns, found {found}")]
    MalformedRow { row: usize, found: usize },
    #[error("row {row}: {token:?} is not a single word token")]
    InvalidToken { row: usize, token: String },
    #[error("unsupported lexicon format {found:?} (expected {FORMAT_TAG} {FORMAT_VERSION})")]
    Version { found: String },
    #[error("lexicon checksum mismatch: {0}")]
    Checksum(String),
    #[error("lexicon line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The observed spellings of one standard form.
///
/// Variants are kept in canonical order: descending count, then ascending
/// surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantEntry {
    standard_form: String,
    variants: Vec<(String, u64)>,
}

impl VariantEntry {
    /// Builds an entry from arbitrary (surface, count) pairs. Duplicate
    /// surfaces are merged and zero counts dropped. Returns `None` when nothing
    /// is left.
    pub fn new(
        standard_form: impl Into<String>,
        variants: impl IntoIterator<Item = (String, u64)>,
    ) -> Option<Self> {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        for (surface, count) in variants {
            if count > 0 {
                *merged.entry(surface).or_default() += count;
            }
        }
        if merged.is_empty() {
            return None;
        }
        let mut variants: Vec<(String, u64)> = merged.into_iter().collect();
        sort_canonical(&mut variants);
        Some(Self {
            standard_form: standard_form.into(),
            variants,
        })
    }

    pub fn standard_form(&self) -> &str {
        &self.standard_form
    }

    pub fn variants(&self) -> &[(String, u64)] {
        &self.variants
    }

    pub fn total_count(&self) -> u64 {
        self.variants.iter().map(|(_, c)| c).sum()
    }

    pub fn count_of(&self, surface: &str) -> Option<u64> {
        self.variants
            .iter()
            .find(|(s, _)| s == surface)
            .map(|(_, c)| *c)
    }
}

fn sort_canonical(items: &mut [(String, u64)]) {
    items.sort_by(|(a, ca), (b, cb)| cb.cmp(ca).then_with(|| a.cmp(b)));
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconMetadata {
    pub source: String,
    /// Unix seconds; left unset for reproducible builds.
    pub built_at: Option<u64>,
    /// Number of correction events (log rows) the lexicon was built from.
    pub total_corrections: u64,
}

/// Standard form → weighted variants, plus the variant → standard transpose.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariantLexicon {
    entries: BTreeMap<String, VariantEntry>,
    inverse: BTreeMap<String, Vec<(String, u64)>>,
    metadata: LexiconMetadata,
}

impl VariantLexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Assembles a lexicon from ready-made entries. Used for hand-built test
    /// lexicons where the identity variant may deliberately be absent.
    pub fn from_entries(
        entries: impl IntoIterator<Item = VariantEntry>,
        metadata: LexiconMetadata,
    ) -> Self {
        let entries: BTreeMap<String, VariantEntry> = entries
            .into_iter()
            .map(|e| (e.standard_form.clone(), e))
            .collect();
        let inverse = transpose(&entries);
        Self {
            entries,
            inverse,
            metadata,
        }
    }

    pub fn metadata(&self) -> &LexiconMetadata {
        &self.metadata
    }

    pub fn set_built_at(&mut self, unix_seconds: Option<u64>) {
        self.metadata.built_at = unix_seconds;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &VariantEntry> {
        self.entries.values()
    }

    pub fn standard_forms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Exact, case-sensitive lookup.
    pub fn lookup(&self, standard_form: &str) -> Option<&VariantEntry> {
        self.entries.get(standard_form)
    }

    /// Standard forms that `surface` was observed for, by descending count
    /// then ascending standard form. Empty when the surface is unknown.
    pub fn inverse_lookup(&self, surface: &str) -> &[(String, u64)] {
        self.inverse.get(surface).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn inverse(&self) -> &BTreeMap<String, Vec<(String, u64)>> {
        &self.inverse
    }

    /// Recomputes the inverse index from the entries alone.
    pub fn rebuild_inverse(&self) -> BTreeMap<String, Vec<(String, u64)>> {
        transpose(&self.entries)
    }

    /// True when every surface maps back to exactly one standard form.
    pub fn is_injective(&self) -> bool {
        self.inverse.values().all(|targets| targets.len() == 1)
    }

    /// Serialises to the versioned TSV format. Output is byte-stable.
    pub fn to_tsv(&self) -> String {
        let mut body = String::new();
        for entry in self.entries.values() {
            for (surface, count) in &entry.variants {
                let _ = writeln!(body, "{}\t{}\t{}", entry.standard_form, surface, count);
            }
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#{FORMAT_TAG} {FORMAT_VERSION} {}",
            self.metadata.total_corrections
        );
        if !self.metadata.source.is_empty() {
            let _ = writeln!(out, "#source {}", self.metadata.source);
        }
        if let Some(ts) = self.metadata.built_at {
            let _ = writeln!(out, "#built {ts}");
        }
        out.push_str(&body);
        let _ = writeln!(out, "#sha256 {}", sha256_hex(&body));
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lines = text.lines().enumerate();
        let header = lines
            .next()
            .map(|(_, l)| l)
            .ok_or_else(|| LexiconError::Version { found: String::new() })?;
        let mut parts = header.trim_start_matches('#').split(' ');
        let (tag, version, total) = (parts.next(), parts.next(), parts.next());
        if !header.starts_with('#') || tag != Some(FORMAT_TAG) || version != Some(FORMAT_VERSION) {
            return Err(LexiconError::Version {
                found: header.to_string(),
            });
        }
        let total_corrections = total
            .and_then(|t| t.parse().ok())
            .ok_or(LexiconError::Parse {
                line: 1,
                reason: "missing total correction count in header".into(),
            })?;

        let mut metadata = LexiconMetadata {
            total_corrections,
            ..Default::default()
        };
        let mut body = String::new();
        let mut rows: Vec<(String, String, u64)> = Vec::new();
        let mut checksum = None;
        for (idx, line) in lines {
            let lineno = idx + 1;
            if checksum.is_some() {
                return Err(LexiconError::Parse {
                    line: lineno,
                    reason: "content after checksum line".into(),
                });
            }
            if let Some(hex) = line.strip_prefix("#sha256 ") {
                checksum = Some(hex.to_string());
                continue;
            }
            if let Some(src) = line.strip_prefix("#source ") {
                metadata.source = src.to_string();
                continue;
            }
            if let Some(ts) = line.strip_prefix("#built ") {
                metadata.built_at = Some(ts.parse().map_err(|_| LexiconError::Parse {
                    line: lineno,
                    reason: format!("bad timestamp {ts:?}"),
                })?);
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [standard, surface, count] = cols[..] else {
                return Err(LexiconError::Parse {
                    line: lineno,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
            };
            let count: u64 = count.parse().map_err(|_| LexiconError::Parse {
                line: lineno,
                reason: format!("bad count {count:?}"),
            })?;
            body.push_str(line);
            body.push('\n');
            rows.push((standard.to_string(), surface.to_string(), count));
        }
        let Some(expected) = checksum else {
            return Err(LexiconError::Checksum("missing checksum line (truncated file?)".into()));
        };
        let actual = sha256_hex(&body);
        if actual != expected {
            return Err(LexiconError::Checksum(format!(
                "expected {expected}, computed {actual}"
            )));
        }

        let mut grouped: BTreeMap<String, Vec<(String, u64)>> = BTreeMap::new();
        for (standard, surface, count) in rows {
            grouped.entry(standard).or_default().push((surface, count));
        }
        let entries = grouped
            .into_iter()
            .filter_map(|(standard, variants)| VariantEntry::new(standard, variants));
        Ok(Self::from_entries(entries, metadata))
    }
}

fn transpose(entries: &BTreeMap<String, VariantEntry>) -> BTreeMap<String, Vec<(String, u64)>> {
    let mut inverse: BTreeMap<String, Vec<(String, u64)>> = BTreeMap::new();
    for entry in entries.values() {
        for (surface, count) in &entry.variants {
            inverse
                .entry(surface.clone())
                .or_default()
                .push((entry.standard_form.clone(), *count));
        }
    }
    for targets in inverse.values_mut() {
        sort_canonical(targets);
    }
    inverse
}

fn sha256_hex(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Builds a lexicon from `(observed, corrected)` rows.
///
/// Each row is one correction event. The corrected form receives an identity
/// variant with count `1 + #rows where observed == corrected`.
pub fn build_lexicon<I, S>(rows: I, source: &str) -> Result<VariantLexicon, LexiconError>
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut total = 0u64;
    for (idx, (observed, corrected)) in rows.into_iter().enumerate() {
        let row = idx + 1;
        let (observed, corrected) = (observed.as_ref(), corrected.as_ref());
        for token in [observed, corrected] {
            if !is_single_word(token) {
                return Err(LexiconError::InvalidToken {
                    row,
                    token: token.to_string(),
                });
            }
        }
        *counts
            .entry(corrected.to_string())
            .or_default()
            .entry(observed.to_string())
            .or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(LexiconError::EmptyLog);
    }
    let entries = counts.into_iter().filter_map(|(standard, mut observed)| {
        *observed.entry(standard.clone()).or_default() += 1;
        VariantEntry::new(standard, observed)
    });
    Ok(VariantLexicon::from_entries(
        entries,
        LexiconMetadata {
            source: source.to_string(),
            built_at: None,
            total_corrections: total,
        },
    ))
}

/// Reads a TSV correction log. Row numbers in errors are 1-based physical
/// line numbers.
pub fn read_correction_log(reader: impl BufRead) -> Result<Vec<(String, String)>, LexiconError> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(LexiconError::MalformedRow {
                row: idx + 1,
                found: cols.len(),
            });
        }
        rows.push((cols[0].to_string(), cols[1].to_string()));
    }
    Ok(rows)
}

pub fn build_lexicon_from_log(path: &Path) -> Result<VariantLexicon, LexiconError> {
    let file = fs::File::open(path)?;
    let rows = read_correction_log(io::BufReader::new(file))?;
    build_lexicon(rows, &path.display().to_string())
}

pub fn save_lexicon(lexicon: &VariantLexicon, path: &Path) -> Result<(), LexiconError> {
    fs::write(path, lexicon.to_tsv())?;
    Ok(())
}

pub fn load_lexicon(path: &Path) -> Result<VariantLexicon, LexiconError> {
    VariantLexicon::from_tsv(&fs::read_to_string(path)?)
}
