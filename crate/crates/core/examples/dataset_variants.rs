//! Derives the non-standard and combined variants of a token-classification
//! split and writes all three in CoNLL format.
//!
//! ```text
//! cargo run --example dataset_variants [-- <out-dir>]
//! ```

use std::path::PathBuf;

use variaforge::dataset::{combine, dataset_path, transform_dataset, write_dataset, Split, Task};
use variaforge::fixtures::{saturating_lexicon, synthetic_dataset};
use variaforge::transform::TransformPlan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("variaforge-datasets"));
    let lexicon = saturating_lexicon(7);
    let task = Task::NER;
    let std = synthetic_dataset(task, Split::Train, 5, 1);
    let plan = TransformPlan::new(task.derivation_mode(), 2024, "NER/train");
    let nstd = transform_dataset(&std, &lexicon, &plan, false)?;
    let comb = combine(&std, &nstd)?;

    for ds in [&std, &nstd, &comb] {
        let path = dataset_path(&out, task, ds.variant, Split::Train);
        write_dataset(ds, &path)?;
        println!("{:<6} {:>3} records -> {}", ds.variant, ds.len(), path.display());
    }
    for (a, b) in std.text_lines().iter().zip(nstd.text_lines()).take(3) {
        println!("  {a}\n  {b}");
    }
    assert_eq!(std.label_counts(), nstd.label_counts());
    Ok(())
}
