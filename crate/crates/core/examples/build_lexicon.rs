//! Builds a variant lexicon from a correction log, saves it and queries it.
//!
//! ```text
//! cargo run --example build_lexicon [-- corrections.tsv]
//! ```

use std::path::PathBuf;

use variaforge::lexicon::{build_lexicon_from_log, load_lexicon, save_lexicon};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let log = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/corrections.tsv"));
    let lexicon = build_lexicon_from_log(&log)?;
    println!(
        "{} standard forms from {} corrections (injective: {})",
        lexicon.len(),
        lexicon.metadata().total_corrections,
        lexicon.is_injective()
    );

    let dir = tempfile_dir();
    let path = dir.join("lexicon.tsv");
    save_lexicon(&lexicon, &path)?;
    let reloaded = load_lexicon(&path)?;
    assert_eq!(reloaded, lexicon);

    for word in ["Bank", "gutt", "Regierung"] {
        if let Some(entry) = reloaded.lookup(word) {
            let shown: Vec<String> = entry.variants().iter().map(|(v, c)| format!("{v}:{c}")).collect();
            println!("{word:<10} -> {}", shown.join(" "));
        }
    }
    for surface in ["Bankk", "gut"] {
        println!("{surface:<10} <- {:?}", reloaded.inverse_lookup(surface));
    }
    Ok(())
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join("variaforge-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}
