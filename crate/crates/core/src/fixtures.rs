//! Deterministic synthetic Luxembourgish-like corpora and lexicons.
//!
//! The real correction data and task datasets are not redistributable, so
//! tests, examples and the demo pipeline run on generated stand-ins: a fixed
//! vocabulary, rule-based spelling variants, and datasets with the published
//! split sizes. Everything here is a pure function of its seed.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{dataset_path, write_dataset, Dataset, DatasetError, Record, RecordKind, Split, Task};
use crate::lexicon::{build_lexicon, VariantLexicon};
use crate::metrics::Variant;
use crate::transform::{fnv1a64, mix64};

/// Standard word forms with their part-of-speech tag.
pub const VOCABULARY: &[(&str, &str)] = &[
    ("ech", "PRON"),
    ("du", "PRON"),
    ("hien", "PRON"),
    ("si", "PRON"),
    ("mir", "PRON"),
    ("dir", "PRON"),
    ("et", "PRON"),
    ("de", "DET"),
    ("den", "DET"),
    ("eng", "DET"),
    ("en", "DET"),
    ("dat", "DET"),
    ("déi", "DET"),
    ("dës", "DET"),
    ("ass", "AUX"),
    ("sinn", "AUX"),
    ("hunn", "AUX"),
    ("huet", "AUX"),
    ("kann", "AUX"),
    ("muss", "AUX"),
    ("wëll", "VERB"),
    ("ginn", "VERB"),
    ("maachen", "VERB"),
    ("kommen", "VERB"),
    ("goen", "VERB"),
    ("liesen", "VERB"),
    ("schreiwen", "VERB"),
    ("bezuelen", "VERB"),
    ("iwwerweisen", "VERB"),
    ("kafen", "VERB"),
    ("spillen", "VERB"),
    ("wunnen", "VERB"),
    ("schaffen", "VERB"),
    ("Mann", "NOUN"),
    ("Fra", "NOUN"),
    ("Kand", "NOUN"),
    ("Stad", "NOUN"),
    ("Haus", "NOUN"),
    ("Kaart", "NOUN"),
    ("Kont", "NOUN"),
    ("Bank", "NOUN"),
    ("Geld", "NOUN"),
    ("Zuch", "NOUN"),
    ("Bus", "NOUN"),
    ("Schoul", "NOUN"),
    ("Wieder", "NOUN"),
    ("Dag", "NOUN"),
    ("Woch", "NOUN"),
    ("Joer", "NOUN"),
    ("Zäit", "NOUN"),
    ("Regierung", "NOUN"),
    ("Spill", "NOUN"),
    ("Gesondheet", "NOUN"),
    ("Rees", "NOUN"),
    ("Buch", "NOUN"),
    ("Iessen", "NOUN"),
    ("grouss", "ADJ"),
    ("kleng", "ADJ"),
    ("gutt", "ADJ"),
    ("schéin", "ADJ"),
    ("nei", "ADJ"),
    ("al", "ADJ"),
    ("séier", "ADJ"),
    ("midd", "ADJ"),
    ("frou", "ADJ"),
    ("net", "PART"),
    ("och", "ADV"),
    ("haut", "ADV"),
    ("muer", "ADV"),
    ("elo", "ADV"),
    ("ëmmer", "ADV"),
    ("vill", "ADV"),
    ("ganz", "ADV"),
    ("nach", "ADV"),
    ("scho", "ADV"),
    ("an", "ADP"),
    ("mat", "ADP"),
    ("fir", "ADP"),
    ("op", "ADP"),
    ("vun", "ADP"),
    ("bei", "ADP"),
    ("iwwer", "ADP"),
    ("no", "ADP"),
    ("a", "CCONJ"),
    ("awer", "CCONJ"),
    ("oder", "CCONJ"),
    ("well", "SCONJ"),
    ("datt", "SCONJ"),
    ("wann", "SCONJ"),
];

/// Proper names with their entity type.
pub const NAMES: &[(&str, &str)] = &[
    ("Marie", "PER"),
    ("Jang", "PER"),
    ("Léa", "PER"),
    ("Lëtzebuerg", "GPE"),
    ("Esch", "GPE"),
    ("Ettelbréck", "GPE"),
    ("Musel", "LOC"),
    ("Sauer", "LOC"),
    ("Spuerkeess", "ORG"),
    ("Chamber", "ORG"),
];

const SUBSTITUTIONS: &[(&str, &str)] = &[
    ("ë", "e"),
    ("é", "e"),
    ("ä", "ae"),
    ("ou", "o"),
    ("ie", "i"),
    ("ue", "u"),
    ("ee", "e"),
    ("aa", "a"),
    ("ss", "s"),
    ("ll", "l"),
    ("tt", "t"),
    ("nn", "n"),
    ("ww", "w"),
    ("w", "v"),
    ("ch", "sch"),
    ("ei", "ai"),
    ("ng", "nk"),
    ("z", "ts"),
];

const MAX_VARIANTS: usize = 4;

/// Rule-based non-standard spellings of `word`, never including `word`
/// itself. Always yields at least one variant.
pub fn spelling_variants(word: &str) -> Vec<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    let applicable: Vec<&(&str, &str)> = SUBSTITUTIONS.iter().filter(|(from, _)| word.contains(from)).collect();
    for (from, to) in &applicable {
        out.insert(word.replace(from, to));
    }
    if let [first, second, ..] = applicable[..] {
        out.insert(word.replace(first.0, first.1).replace(second.0, second.1));
    }
    // final-n deletion
    if word.chars().count() > 2 && word.ends_with('n') {
        out.insert(word[..word.len() - 1].to_string());
    }
    out.remove(word);
    out.retain(|v| !v.is_empty());
    if out.is_empty() {
        let last = word.chars().last().expect("non-empty word");
        out.insert(format!("{word}{last}"));
    }
    out.into_iter().take(MAX_VARIANTS).collect()
}

fn all_words() -> impl Iterator<Item = &'static str> {
    VOCABULARY.iter().chain(NAMES).map(|(w, _)| *w)
}

fn rng_for(seed: u64, salt: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(&[seed, fnv1a64(salt.as_bytes())]))
}

/// A correction log covering every fixture word. Variant events outnumber
/// identity events about four to one, so destandardising changes roughly
/// 80 % of words.
pub fn synthetic_correction_log(seed: u64) -> Vec<(String, String)> {
    let mut rng = rng_for(seed, "correction-log");
    let mut rows = Vec::new();
    for word in all_words() {
        let mut variant_total = 0u64;
        for v in spelling_variants(word) {
            let count = rng.random_range(2..=8u64);
            variant_total += count;
            rows.extend((0..count).map(|_| (v.clone(), word.to_string())));
        }
        // identity count in the lexicon is rows + 1
        let identity_rows = (variant_total as f64 / 4.0).round() as u64;
        rows.extend((1..identity_rows).map(|_| (word.to_string(), word.to_string())));
    }
    rows
}

/// Lexicon over every fixture word, built from [`synthetic_correction_log`].
pub fn saturating_lexicon(seed: u64) -> VariantLexicon {
    build_lexicon(synthetic_correction_log(seed), "synthetic").expect("fixture log is well-formed")
}

fn capitalise(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

/// Sentence as (token, POS tag, entity tag) triples; the first token is
/// capitalised and the last is sentence punctuation.
fn sentence(rng: &mut ChaCha8Rng, keyword: Option<&str>) -> Vec<(String, &'static str, String)> {
    let len = rng.random_range(5..=11);
    let mut out: Vec<(String, &'static str, String)> = Vec::with_capacity(len + 2);
    let keyword_at = keyword.map(|_| rng.random_range(0..len));
    for i in 0..len {
        if Some(i) == keyword_at {
            out.push((keyword.unwrap().to_string(), "NOUN", "O".into()));
        } else if rng.random_bool(0.12) {
            let (name, ent) = NAMES.choose(rng).unwrap();
            out.push((name.to_string(), "PROPN", format!("B-{ent}")));
        } else {
            let (w, pos) = VOCABULARY.choose(rng).unwrap();
            out.push((w.to_string(), pos, "O".into()));
        }
        if i + 2 < len && rng.random_bool(0.08) {
            out.push((",".into(), "PUNCT", "O".into()));
        }
    }
    if out[0].2 == "O" {
        out[0].0 = capitalise(&out[0].0);
    }
    let end = *[".", ".", ".", "?", "!"].choose(rng).unwrap();
    out.push((end.into(), "PUNCT", "O".into()));
    out
}

fn join_sentence(tokens: &[(String, &'static str, String)]) -> String {
    let mut s = String::new();
    for (i, (t, pos, _)) in tokens.iter().enumerate() {
        if i > 0 && *pos != "PUNCT" {
            s.push(' ');
        }
        s.push_str(t);
    }
    s
}

fn labels_for(task: Task) -> &'static [&'static str] {
    match task {
        Task::IC => &["balance", "transfer", "card", "loan", "greeting", "opening_hours"],
        Task::TC => &[
            "science/technology",
            "travel",
            "politics",
            "sports",
            "health",
            "entertainment",
            "geography",
        ],
        Task::SC => &["positive", "negative", "neutral"],
        Task::CM => &["published", "archived"],
        Task::WNLI => &["0", "1"],
        Task::NER | Task::POS => &[],
    }
}

/// Label-specific cue word, so the toy tasks are learnable.
fn cue_word(task: Task, label_index: usize) -> &'static str {
    let cues: &[&str] = match task {
        Task::IC => &["Kont", "Geld", "Kaart", "Bank", "Dag", "Woch"],
        Task::TC => &["Buch", "Rees", "Regierung", "Spill", "Gesondheet", "Haus", "Stad"],
        Task::SC => &["gutt", "midd", "Wieder"],
        Task::CM => &["frou", "Zuch"],
        _ => &["Mann"],
    };
    cues[label_index % cues.len()]
}

/// Replaces each word, independently with probability `rate`, by one of its
/// non-identity variants. Uses the fixture RNG, not the transform sampler.
pub fn add_noise(line: &str, rate: f64, rng: &mut ChaCha8Rng) -> String {
    let mut spans = crate::transform::tokenize_line(line);
    for span in spans.iter_mut().filter(|s| s.is_word) {
        if rng.random_bool(rate) {
            let upper = span.surface.chars().next().is_some_and(char::is_uppercase);
            let base = if upper && !all_words().any(|w| w == span.surface) {
                let mut c = span.surface.chars();
                c.next().unwrap().to_lowercase().collect::<String>() + c.as_str()
            } else {
                span.surface.clone()
            };
            let variants = spelling_variants(&base);
            let pick = variants.choose(rng).unwrap();
            span.surface = if upper { capitalise(pick) } else { pick.clone() };
        }
    }
    crate::transform::detokenize(&spans)
}

/// Share of words the fixture generator perturbs in natively non-standard
/// tasks.
pub const NATIVE_NOISE_RATE: f64 = 0.3;

/// A synthetic dataset of `n` records in the task's native variant.
pub fn synthetic_dataset(task: Task, split: Split, n: usize, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, &format!("{task}/{split}"));
    let noisy = task.native_variant() == Variant::NStd;
    let labels = labels_for(task);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("{}-{}-{:05}", task.as_str().to_lowercase(), split, i + 1);
        let record = match task.kind() {
            RecordKind::Token => {
                let tokens = sentence(&mut rng, None);
                let (words, tags): (Vec<String>, Vec<String>) = tokens
                    .into_iter()
                    .map(|(t, pos, ent)| (t, if task == Task::POS { pos.to_string() } else { ent }))
                    .unzip();
                Record::token(id, words, tags)
            }
            RecordKind::Pair => {
                let label = rng.random_range(0..labels.len());
                let a = join_sentence(&sentence(&mut rng, None));
                let b = join_sentence(&sentence(&mut rng, Some(cue_word(task, label))));
                Record::pair(id, a, b, labels[label])
            }
            RecordKind::Sequence => {
                let label = rng.random_range(0..labels.len());
                let mut text = join_sentence(&sentence(&mut rng, Some(cue_word(task, label))));
                if noisy {
                    text = add_noise(&text, NATIVE_NOISE_RATE, &mut rng);
                }
                Record::sequence(id, text, labels[label])
            }
        };
        records.push(record);
    }
    Dataset::new(task, split, task.native_variant(), records).expect("generated records are valid")
}

/// Synthetic dataset with the published record count for this split.
pub fn reference_sized_dataset(task: Task, split: Split, seed: u64) -> Dataset {
    let idx = Split::ALL.iter().position(|s| *s == split).unwrap();
    synthetic_dataset(task, split, task.reference_split_sizes()[idx], seed)
}

/// Writes all three splits of each task in its native variant under
/// `<root>/<TASK>/<variant>/`. `sizes` overrides the published counts.
pub fn write_native_tree(
    root: &Path,
    tasks: &[Task],
    sizes: Option<[usize; 3]>,
    seed: u64,
) -> Result<(), DatasetError> {
    for &task in tasks {
        for (i, split) in Split::ALL.into_iter().enumerate() {
            let n = sizes.map_or(task.reference_split_sizes()[i], |s| s[i]);
            let ds = synthetic_dataset(task, split, n, seed);
            write_dataset(&ds, &dataset_path(root, task, ds.variant, split))?;
        }
    }
    Ok(())
}
