use std::collections::BTreeMap;

use proptest::prelude::*;

use variaforge::experiment::{expand_manifest, ExperimentConfig, Hyperparameters, TaskConfig};
use variaforge::dataset::Task;
use variaforge::fixtures::saturating_lexicon;
use variaforge::lexicon::{build_lexicon, VariantLexicon};
use variaforge::metrics::{aggregate, ScoreRecord, Variant};
use variaforge::transform::{tokenize_line, transform_line, Mode, TransformPlan};

fn word() -> impl Strategy<Value = String> {
    "[a-eë]{1,4}"
}

fn log() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec((word(), word()), 1..40)
}

fn line() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            Just("Bank".to_string()),
            Just("gutt".to_string()),
            Just("Regierung".to_string()),
            Just("Kont".to_string()),
            Just(",".to_string()),
            Just("d'Haus".to_string()),
            "[a-zA-Zë]{1,6}",
        ],
        0..12,
    )
    .prop_map(|ws| ws.join(" "))
}

proptest! {
    #[test]
    fn inverse_is_transpose(rows in log()) {
        let lex = build_lexicon(rows, "p").unwrap();
        let mut forward = BTreeMap::new();
        for e in lex.entries() {
            for (v, c) in e.variants() {
                forward.insert((e.standard_form().to_string(), v.clone()), *c);
            }
        }
        let mut inverse = BTreeMap::new();
        for e in lex.entries() {
            for (v, _) in e.variants() {
                for (s, c) in lex.inverse_lookup(v) {
                    inverse.insert((s.clone(), v.clone()), *c);
                }
            }
        }
        prop_assert_eq!(forward, inverse);
    }

    #[test]
    fn serialisation_is_canonical(mut rows in log()) {
        let a = build_lexicon(rows.clone(), "p").unwrap();
        rows.reverse();
        let b = build_lexicon(rows, "p").unwrap();
        prop_assert_eq!(a.to_tsv(), b.to_tsv());
        prop_assert_eq!(VariantLexicon::from_tsv(&a.to_tsv()).unwrap(), a);
    }

    #[test]
    fn word_count_is_preserved(l in line(), seed in any::<u64>()) {
        let lex = saturating_lexicon(1);
        for mode in [Mode::Destandardise, Mode::Normalise] {
            let plan = TransformPlan::new(mode, seed, "p");
            let out = transform_line(&l, &lex, &plan, 0);
            let count = |s: &str| tokenize_line(s).iter().filter(|t| t.is_word).count();
            prop_assert_eq!(count(&l), count(&out));
            prop_assert_eq!(l.split_whitespace().count(), out.split_whitespace().count());
            prop_assert_eq!(transform_line(&l, &lex, &plan, 0), out);
        }
    }

    #[test]
    fn aggregation_ignores_order(mut scores in prop::collection::vec(0.0f64..100.0, 1..8), rot in 0usize..8) {
        let records = |s: &[f64]| -> Vec<ScoreRecord> {
            s.iter().enumerate().map(|(i, f)| ScoreRecord::new("IC", Variant::Std, Variant::Std, i as i64, *f)).collect()
        };
        let a = aggregate(&records(&scores));
        let k = rot % scores.len();
        scores.rotate_left(k);
        let b = aggregate(&records(&scores));
        prop_assert_eq!(a.values().next().unwrap().to_string(), b.values().next().unwrap().to_string());
    }
}

#[test]
fn seeds_change_samples() {
    let lex = saturating_lexicon(1);
    let text = "Bank gutt Regierung Kont Bank gutt Regierung Kont Bank gutt";
    let outs: std::collections::BTreeSet<String> = (0..10)
        .map(|s| transform_line(text, &lex, &TransformPlan::new(Mode::Destandardise, s, "p"), 0))
        .collect();
    assert!(outs.len() > 5);
}

fn all_tasks_config() -> ExperimentConfig {
    ExperimentConfig {
        results: "r.jsonl".into(),
        models: vec!["m".into()],
        seeds: vec![1, 2, 3, 4, 5],
        train_variants: Variant::ALL.to_vec(),
        data_root: None,
        tasks: Task::ALL
            .iter()
            .map(|t| TaskConfig {
                id: t.to_string(),
                ..Default::default()
            })
            .collect(),
    }
}

#[test]
fn full_grid_size() {
    let m = expand_manifest(&all_tasks_config(), |_| true).unwrap();
    assert_eq!(m.cells.len(), 105);
    assert_eq!(m.evaluation_count(), 315);
    let tc = m.tasks.iter().find(|t| t.id == Task::TC).unwrap();
    assert_eq!(tc.hyperparameters.learning_rate, 2e-5);
    assert_eq!(Hyperparameters::default_for(Task::NER).epochs, 3);
}

#[test]
fn unknown_task_is_an_error() {
    let mut cfg = all_tasks_config();
    cfg.tasks.push(TaskConfig {
        id: "FOO".into(),
        ..Default::default()
    });
    let err = expand_manifest(&cfg, |_| true).unwrap_err();
    assert!(err.to_string().contains("FOO"));
}

#[test]
fn missing_dataset_is_reported() {
    let err = expand_manifest(&all_tasks_config(), |p| !p.contains("n-std/dev")).unwrap_err();
    assert!(err.to_string().contains("dev"), "{err}");
}
