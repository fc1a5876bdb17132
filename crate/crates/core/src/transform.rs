//! Destandardisation and normalisation of text against a [`VariantLexicon`].
//!
//! Destandardising replaces each word occurrence by a variant drawn in
//! proportion to its correction frequency. Every draw comes from a
//! counter-based generator keyed by the plan's global seed and the token's
//! site (dataset, line, token index), so results never depend on processing
//! order. Normalising maps surfaces back to their most frequent standard form,
//! falling back to the closest standard form by edit distance.

use std::fmt;
use std::str::FromStr;

use unicode_normalization::char::is_combining_mark;

use crate::lexicon::{VariantEntry, VariantLexicon};
use crate::metrics::levenshtein;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Destandardise,
    Normalise,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Destandardise => "destandardise",
            Mode::Normalise => "normalise",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "destandardise" | "destandardize" => Ok(Mode::Destandardise),
            "normalise" | "normalize" => Ok(Mode::Normalise),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CasingPolicy {
    /// Match and emit with the original token's initial capitalisation.
    #[default]
    PreserveInitial,
    /// Exact-case lookup, variant emitted verbatim.
    Literal,
}

impl fmt::Display for CasingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CasingPolicy::PreserveInitial => "preserve-initial",
            CasingPolicy::Literal => "literal",
        })
    }
}

impl FromStr for CasingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preserve-initial" => Ok(CasingPolicy::PreserveInitial),
            "literal" => Ok(CasingPolicy::Literal),
            other => Err(format!("unknown casing policy {other:?}")),
        }
    }
}

/// Everything that determines the output of a transform run besides the
/// input text and the lexicon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformPlan {
    pub mode: Mode,
    pub global_seed: u64,
    pub casing: CasingPolicy,
    /// Edit-distance fallback for normalisation; 0 disables it.
    pub max_edit_distance: usize,
    pub dataset_id: String,
}

impl TransformPlan {
    pub fn new(mode: Mode, global_seed: u64, dataset_id: impl Into<String>) -> Self {
        Self {
            mode,
            global_seed,
            casing: CasingPolicy::default(),
            max_edit_distance: 2,
            dataset_id: dataset_id.into(),
        }
    }

    pub fn with_casing(mut self, casing: CasingPolicy) -> Self {
        self.casing = casing;
        self
    }

    pub fn with_max_edit_distance(mut self, k: usize) -> Self {
        self.max_edit_distance = k;
        self
    }

    fn dataset_key(&self) -> u64 {
        fnv1a64(self.dataset_id.as_bytes())
    }
}

/// One lossless piece of a line: the whitespace before it and the surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub leading_ws: String,
    pub surface: String,
    pub is_word: bool,
}

pub fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || c == '\'' || c == '\u{2019}' || is_combining_mark(c)
}

/// True when `s` is non-empty and consists only of word characters.
pub fn is_single_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_word_char)
}

/// Splits a line into word runs (letters, apostrophes, combining marks) and
/// non-word runs. Trailing whitespace is carried by a final span with an empty
/// surface.
pub fn tokenize_line(line: &str) -> Vec<TokenSpan> {
    #[derive(PartialEq)]
    enum Class {
        Space,
        Word,
        Other,
    }
    let class = |c: char| {
        if c.is_whitespace() {
            Class::Space
        } else if is_word_char(c) {
            Class::Word
        } else {
            Class::Other
        }
    };

    let mut spans = Vec::new();
    let mut ws = String::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        let kind = class(c);
        if kind == Class::Space {
            ws.push(c);
            continue;
        }
        let mut surface = String::from(c);
        while let Some(&next) = chars.peek() {
            if class(next) != kind {
                break;
            }
            surface.push(next);
            chars.next();
        }
        spans.push(TokenSpan {
            leading_ws: std::mem::take(&mut ws),
            surface,
            is_word: kind == Class::Word,
        });
    }
    if !ws.is_empty() {
        spans.push(TokenSpan {
            leading_ws: ws,
            surface: String::new(),
            is_word: false,
        });
    }
    spans
}

pub fn detokenize(spans: &[TokenSpan]) -> String {
    spans
        .iter()
        .flat_map(|s| [s.leading_ws.as_str(), s.surface.as_str()])
        .collect()
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive mixing of several 64-bit words into one.
pub fn mix64(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5851_f42d_4c95_7f2d, |acc, &p| {
        splitmix64(acc.wrapping_add(GOLDEN_GAMMA) ^ splitmix64(p.wrapping_add(GOLDEN_GAMMA)))
    })
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Uniform draw in [0, 1) for one site; a pure function of its arguments.
pub fn site_uniform(global_seed: u64, site_seed: u64) -> f64 {
    let bits = mix64(&[global_seed, site_seed]) >> 11;
    bits as f64 / (1u64 << 53) as f64
}

/// Site seed of word `token_index` on `line_index` of the plan's dataset.
pub fn site_seed(plan: &TransformPlan, line_index: u64, token_index: u64) -> u64 {
    mix64(&[plan.dataset_key(), line_index, token_index])
}

fn starts_uppercase(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn with_initial(s: &str, upper: bool) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => {
            let head: String = if upper {
                first.to_uppercase().collect()
            } else {
                first.to_lowercase().collect()
            };
            head + chars.as_str()
        }
        None => String::new(),
    }
}

/// Resolves `token` against the lexicon under the casing policy. Returns the
/// matched value and whether the initial must be re-capitalised on output.
fn resolve_cased<T>(
    token: &str,
    casing: CasingPolicy,
    find: impl Fn(&str) -> Option<T>,
) -> Option<(T, bool)> {
    if let Some(hit) = find(token) {
        return Some((hit, casing == CasingPolicy::PreserveInitial && starts_uppercase(token)));
    }
    if casing == CasingPolicy::PreserveInitial && starts_uppercase(token) {
        let folded = with_initial(token, false);
        if folded != token {
            return find(&folded).map(|hit| (hit, true));
        }
    }
    None
}

fn apply_initial(s: &str, recapitalise: bool) -> String {
    if recapitalise {
        with_initial(s, true)
    } else {
        s.to_string()
    }
}

/// Picks the variant whose cumulative-frequency interval contains `u`.
pub fn select_variant(entry: &VariantEntry, u: f64) -> &str {
    let total = entry.total_count() as f64;
    let target = u * total;
    let mut cumulative = 0.0;
    for (surface, count) in entry.variants() {
        cumulative += *count as f64;
        if target < cumulative {
            return surface;
        }
    }
    // u < 1 guarantees a hit above; guard against float edge cases
    &entry.variants().last().expect("entries are non-empty").0
}

pub fn destandardise_token(
    token: &str,
    lexicon: &VariantLexicon,
    plan: &TransformPlan,
    site_seed: u64,
) -> String {
    match resolve_cased(token, plan.casing, |t| lexicon.lookup(t)) {
        Some((entry, recap)) => {
            let u = site_uniform(plan.global_seed, site_seed);
            apply_initial(select_variant(entry, u), recap)
        }
        None => token.to_string(),
    }
}

/// Best standard form for a non-standard surface, before casing is applied.
fn normalise_target<'l>(token: &str, lexicon: &'l VariantLexicon, max_distance: usize) -> Option<&'l str> {
    if let Some((standard, _)) = lexicon.inverse_lookup(token).first() {
        return Some(standard);
    }
    if max_distance == 0 {
        return None;
    }
    let token_chars: Vec<char> = token.chars().collect();
    let mut best: Option<(usize, u64, &str)> = None;
    for entry in lexicon.entries() {
        let form = entry.standard_form();
        let len = form.chars().count();
        if len.abs_diff(token_chars.len()) > max_distance {
            continue;
        }
        let form_chars: Vec<char> = form.chars().collect();
        let d = levenshtein(&token_chars, &form_chars);
        if d > max_distance {
            continue;
        }
        let candidate = (d, entry.total_count(), form);
        let better = match best {
            None => true,
            Some((bd, bc, bf)) => (d, std::cmp::Reverse(candidate.1), form) < (bd, std::cmp::Reverse(bc), bf),
        };
        if better {
            best = Some(candidate);
        }
    }
    best.map(|(_, _, form)| form)
}

pub fn normalise_token(token: &str, lexicon: &VariantLexicon, plan: &TransformPlan) -> String {
    let k = plan.max_edit_distance;
    // Exact inverse hits win over any edit-distance candidate, so the
    // casing fallback is tried on the inverse index first.
    let exact = resolve_cased(token, plan.casing, |t| {
        lexicon.inverse_lookup(t).first().map(|(s, _)| s.as_str())
    });
    let hit = exact.or_else(|| resolve_cased(token, plan.casing, |t| normalise_target(t, lexicon, k)));
    match hit {
        Some((standard, recap)) => apply_initial(standard, recap),
        None => token.to_string(),
    }
}

/// Applies `f(word, word_index)` to every word span, leaving the rest intact.
fn map_words(line: &str, mut f: impl FnMut(&str, u64) -> String) -> String {
    let mut spans = tokenize_line(line);
    for (word_index, span) in spans.iter_mut().filter(|s| s.is_word).enumerate() {
        span.surface = f(&span.surface, word_index as u64);
    }
    detokenize(&spans)
}

pub fn destandardise_line(
    line: &str,
    lexicon: &VariantLexicon,
    plan: &TransformPlan,
    line_index: u64,
) -> String {
    map_words(line, |word, i| {
        destandardise_token(word, lexicon, plan, site_seed(plan, line_index, i))
    })
}

pub fn normalise_line(line: &str, lexicon: &VariantLexicon, plan: &TransformPlan) -> String {
    map_words(line, |word, _| normalise_token(word, lexicon, plan))
}

/// Runs the plan's mode on one line.
pub fn transform_line(
    line: &str,
    lexicon: &VariantLexicon,
    plan: &TransformPlan,
    line_index: u64,
) -> String {
    match plan.mode {
        Mode::Destandardise => destandardise_line(line, lexicon, plan, line_index),
        Mode::Normalise => normalise_line(line, lexicon, plan),
    }
}

/// Transforms a pre-tokenised sequence (e.g. CoNLL tokens). Word indices run
/// across the whole sequence, so a token list behaves like the line formed by
/// joining it with spaces. The output has exactly one item per input token.
pub fn transform_tokens(
    tokens: &[String],
    lexicon: &VariantLexicon,
    plan: &TransformPlan,
    line_index: u64,
) -> Vec<String> {
    let mut word_index = 0u64;
    tokens
        .iter()
        .map(|token| {
            map_words(token, |word, _| {
                let out = match plan.mode {
                    Mode::Destandardise => destandardise_token(
                        word,
                        lexicon,
                        plan,
                        site_seed(plan, line_index, word_index),
                    ),
                    Mode::Normalise => normalise_token(word, lexicon, plan),
                };
                word_index += 1;
                out
            })
        })
        .collect()
}

/// Transforms a multi-line text block line by line; `first_line_index` is the
/// site index of the first line.
pub fn transform_text(
    text: &str,
    lexicon: &VariantLexicon,
    plan: &TransformPlan,
    first_line_index: u64,
) -> String {
    text.split('\n')
        .enumerate()
        .map(|(i, line)| transform_line(line, lexicon, plan, first_line_index + i as u64))
        .collect::<Vec<_>>()
        .join("\n")
}
