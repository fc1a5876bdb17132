//! Toolkit for studying orthographic variation in classification corpora.
//!
//! The crate builds frequency-weighted spelling-variant lexicons from
//! correction logs, destandardises and normalises text with them, measures
//! how far two versions of a corpus diverge (WER/CER), derives standard,
//! non-standard and combined variants of task datasets, lays out the
//! fine-tuning grid and aggregates its results into train × test matrices,
//! and validates sociolinguistic language cards.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod card;
pub mod cli;
pub mod dataset;
pub mod experiment;
pub mod fixtures;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod transform;

pub use card::{new_card_template, parse_card, render_card, validate_card, LanguageCard, Violation};
pub use dataset::{combine, read_dataset, transform_dataset, write_dataset, Dataset, Record, RecordBody, Split, Task};
pub use experiment::{build_manifest, collect_results, render_matrix, ExperimentManifest, ResultMatrix};
pub use lexicon::{build_lexicon, load_lexicon, save_lexicon, VariantEntry, VariantLexicon};
pub use metrics::{cer, corpus_error_rates, weighted_f1, wer, ErrorRateReport, ScoreRecord, Variant};
pub use transform::{
    destandardise_line, destandardise_token, normalise_line, normalise_token, tokenize_line, CasingPolicy, Mode,
    TokenSpan, TransformPlan,
};
