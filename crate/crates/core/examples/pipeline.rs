//! Runs the whole derivation on the shipped fixture config: every dataset
//! variant, the experiment manifest and the divergence report.
//!
//! ```text
//! cargo run --example pipeline [-- <out-dir>]
//! ```

use std::path::{Path, PathBuf};

use variaforge::pipeline::{pipeline_run, render_divergence, RunOverrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/pipeline.toml");
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("variaforge-pipeline"));
    let summary = pipeline_run(
        &config,
        &RunOverrides {
            seed: None,
            out_dir: Some(out_dir),
        },
    )?;
    println!("{} files under {}", summary.files.len(), summary.out_dir);
    for f in &summary.files {
        println!("  {f}");
    }
    println!("{} cells, {} evaluations\n", summary.cells, summary.evaluations);
    print!("{}", render_divergence(&summary.divergence));
    Ok(())
}
