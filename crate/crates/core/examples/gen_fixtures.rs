//! Regenerates the small pipeline fixture under `fixtures/pipeline/`.
//!
//! ```text
//! cargo run --example gen_fixtures [-- <out-dir>]
//! ```

use std::fs;
use std::path::PathBuf;

use variaforge::dataset::{Split, Task};
use variaforge::fixtures::{synthetic_correction_log, write_native_tree};
use variaforge::lexicon::build_lexicon;

const SEED: u64 = 7;
const SIZES: [usize; 3] = [40, 10, 10];

const CONFIG: &str = r#"lexicon = "lexicon.tsv"
out_dir = "out"
seed = 2024
models = ["tiny-encoder"]
seeds = [1, 2, 3]

[[tasks]]
id = "POS"
dir = "raw/POS/std"

[[tasks]]
id = "SC"
dir = "raw/SC/n-std"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline"));
    fs::create_dir_all(&out)?;

    let rows = synthetic_correction_log(SEED);
    let log: String = rows.iter().map(|(o, c)| format!("{o}\t{c}\n")).collect();
    fs::write(out.join("corrections.tsv"), log)?;
    let lexicon = build_lexicon(rows, "corrections.tsv")?;
    fs::write(out.join("lexicon.tsv"), lexicon.to_tsv())?;

    write_native_tree(&out.join("raw"), &[Task::POS, Task::SC], Some(SIZES), SEED)?;
    fs::write(out.join("pipeline.toml"), CONFIG)?;

    println!("{} lexicon entries, {} splits per task -> {}", lexicon.len(), Split::ALL.len(), out.display());
    Ok(())
}
