//! Expands an experiment grid, fills it with made-up scores and renders the
//! train × test matrix.
//!
//! ```text
//! cargo run --example experiment_matrix
//! ```

use variaforge::experiment::{collect_results, expand_manifest, render_matrix, ExperimentConfig, TaskConfig};
use variaforge::metrics::{ScoreRecord, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig {
        results: "results.jsonl".into(),
        models: vec!["tiny-encoder".into()],
        seeds: vec![1, 2, 3, 4, 5],
        train_variants: Variant::ALL.to_vec(),
        data_root: None,
        tasks: vec![TaskConfig {
            id: "SC".into(),
            ..Default::default()
        }],
    };
    let manifest = expand_manifest(&config, |_| true)?;
    println!("{} training cells, {} evaluations", manifest.cells.len(), manifest.evaluation_count());

    let mut jsonl = String::new();
    for cell in &manifest.cells {
        for test in Variant::ALL {
            let bonus = if cell.train_variant == test { 4.0 } else { 0.0 };
            let mut rec = ScoreRecord::new("SC", cell.train_variant, test, cell.seed, 55.0 + bonus + cell.seed as f64 * 0.5);
            rec.model = cell.model.clone();
            rec.cell_id = Some(cell.id.clone());
            jsonl.push_str(&serde_json::to_string(&rec)?);
            jsonl.push('\n');
        }
    }
    let collected = collect_results(&jsonl, Some(&manifest))?;
    print!("{}", render_matrix(&collected.records, "tiny-encoder", "SC")?.to_text());
    Ok(())
}
