use std::fs;
use std::path::{Path, PathBuf};

use variaforge::cli::run;
use variaforge::dataset::{Split, Task};
use variaforge::experiment::ExperimentManifest;
use variaforge::fixtures::{synthetic_correction_log, synthetic_dataset};
use variaforge::lexicon::{build_lexicon, load_lexicon};
use variaforge::dataset::render_dataset;
use variaforge::pipeline::{pipeline_run, PipelineError, RunOverrides, MANIFEST_FILE, REPORT_FILE};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline")
}

#[test]
fn shipped_fixture_matches_generator() {
    let rows = synthetic_correction_log(7);
    let lex = build_lexicon(rows, "corrections.tsv").unwrap();
    assert_eq!(load_lexicon(&fixture().join("lexicon.tsv")).unwrap(), lex);
    for (task, variant) in [(Task::POS, "std"), (Task::SC, "n-std")] {
        for (split, n) in Split::ALL.into_iter().zip([40, 10, 10]) {
            let path = fixture().join(format!("raw/{task}/{variant}/{split}.{}", task.file_extension()));
            let shipped = fs::read_to_string(&path).unwrap();
            assert_eq!(shipped, render_dataset(&synthetic_dataset(task, split, n, 7)), "{}", path.display());
        }
    }
}

#[test]
fn run_writes_all_variants_and_a_loadable_manifest() {
    let out = tempfile::tempdir().unwrap();
    let summary = pipeline_run(
        &fixture().join("pipeline.toml"),
        &RunOverrides {
            seed: None,
            out_dir: Some(out.path().to_path_buf()),
        },
    )
    .unwrap();
    assert_eq!(summary.files.len(), 2 * 9 + 2);
    assert_eq!(summary.cells, 2 * 3 * 3);
    let manifest = ExperimentManifest::from_toml(&fs::read_to_string(out.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.cells.len(), 18);
    for task in &manifest.tasks {
        for paths in task.data.values() {
            for split in Split::ALL {
                assert!(out.path().join(paths.get(split)).is_file(), "{}", paths.get(split));
            }
        }
    }
    let report = fs::read_to_string(out.path().join(REPORT_FILE)).unwrap();
    assert!(report.contains("destandardised  POS"));
    assert!(report.contains("normalised      SC"));
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture().join("pipeline.toml");
    let read = |seed: Option<u64>, name: &str| {
        let out = dir.path().join(name);
        pipeline_run(&cfg, &RunOverrides { seed, out_dir: Some(out.clone()) }).unwrap();
        fs::read_to_string(out.join("datasets/POS/n-std/train.conll")).unwrap()
    };
    let config_seed = read(None, "a");
    assert_eq!(config_seed, read(Some(2024), "b"));
    assert_ne!(config_seed, read(Some(1), "c"));
}

#[test]
fn missing_inputs_fail_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pipeline.toml");
    fs::write(&cfg, "lexicon = \"nope.tsv\"\n[[tasks]]\nid = \"POS\"\ndir = \"raw\"\n").unwrap();
    let out = dir.path().join("out");
    let err = pipeline_run(&cfg, &RunOverrides { seed: None, out_dir: Some(out.clone()) }).unwrap_err();
    assert!(matches!(err, PipelineError::MissingInput { what: "lexicon", .. }), "{err}");
    assert!(!out.exists());

    let res = run(["variaforge", "pipeline", "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.exit_code, 1);
}

#[test]
fn cli_seed_env_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture().join("pipeline.toml");
    let out = dir.path().join("o");
    let res = run(["variaforge", "--seed", "5", "--json", "pipeline", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.exit_code, 0, "{:?}", res.diagnostics);
    let doc: serde_json::Value = serde_json::from_str(&res.stdout).unwrap();
    assert_eq!(doc["result"]["divergence"].as_array().unwrap().len(), 2);
}
