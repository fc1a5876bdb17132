//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line; the run
//! fails if any criterion fails.
//!
//! ```text
//! cargo test -p variaforge --test acceptance
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use variaforge::card::{validate_card, CRITERIA, LUXEMBOURGISH_CARD};
use variaforge::cli;
use variaforge::dataset::{self, combine, transform_dataset, Dataset, Record, Split, Task};
use variaforge::experiment::render_matrix;
use variaforge::fixtures::{reference_sized_dataset, saturating_lexicon, write_native_tree};
use variaforge::lexicon::{LexiconMetadata, VariantEntry, VariantLexicon};
use variaforge::metrics::{self, cer, corpus_error_rates, weighted_f1, ErrorRateOptions, ScoreRecord, Variant};
use variaforge::transform::{
    destandardise_token, normalise_line, site_seed, transform_line, Mode, TransformPlan,
};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline")
}

// Plain recursion with memoisation on (i, j); no table filling.
fn brute_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let key = (a.len(), b.len());
        if let Some(&d) = memo.get(&key) {
            return d;
        }
        let d = if a[0] == b[0] {
            go(&a[1..], &b[1..], memo)
        } else {
            1 + go(&a[1..], b, memo)
                .min(go(a, &b[1..], memo))
                .min(go(&a[1..], &b[1..], memo))
        };
        memo.insert(key, d);
        d
    }
    go(a, b, &mut HashMap::new())
}

fn edit_distance_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut r = rng(11);
    let words = ["a", "b", "c", "de", "ë", "ä"];
    let chars = ['a', 'b', 'c', 'é', 'ë', ' ', 'x'];
    for i in 0..1000 {
        let n = r.random_range(1..=10);
        let m = r.random_range(0..=10);
        let hyp_w: Vec<&str> = (0..m).map(|_| *words.choose(&mut r).unwrap()).collect();
        let ref_w: Vec<&str> = (0..n).map(|_| *words.choose(&mut r).unwrap()).collect();
        let got = metrics::wer(&ref_w, &hyp_w).map_err(|e| e.to_string())?;
        let want = brute_distance(&ref_w, &hyp_w);
        ensure(got.edits.total() == want, || format!("pair {i}: wer edits {} vs {want}", got.edits.total()))?;
        ensure((got.rate() - 100.0 * want as f64 / n as f64).abs() < 1e-12, || format!("pair {i}: wer rate"))?;

        let ref_c: String = (0..n).map(|_| *chars.choose(&mut r).unwrap()).collect();
        let hyp_c: String = (0..m).map(|_| *chars.choose(&mut r).unwrap()).collect();
        let rc: Vec<char> = ref_c.chars().collect();
        let hc: Vec<char> = hyp_c.chars().collect();
        let want = 100.0 * brute_distance(&rc, &hc) as f64 / rc.len() as f64;
        let got = cer(&ref_c, &hyp_c).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("pair {i}: cer {got} vs {want}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 pairs exact, {:.2} s", elapsed.as_secs_f64()))
}

fn frequency_fidelity() -> Result<String, String> {
    let entry = VariantEntry::new("as", [("as".to_string(), 3), ("ass".to_string(), 1)]).unwrap();
    let lex = VariantLexicon::from_entries(vec![entry], LexiconMetadata::default());
    let plan = TransformPlan::new(Mode::Destandardise, 20240501, "fidelity");
    let sites = 100_000u64;
    let mut hits = 0u64;
    for i in 0..sites {
        if destandardise_token("as", &lex, &plan, site_seed(&plan, i / 50, i % 50)) == "as" {
            hits += 1;
        }
    }
    let p = hits as f64 / sites as f64;
    ensure((p - 0.75).abs() <= 0.01, || format!("identity share {p:.4}"))?;
    Ok(format!("{p:.4} / {:.4}", 1.0 - p))
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Result<String, String> {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixture_dir().join("pipeline.toml");
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let res = cli::run([
            "variaforge",
            "pipeline",
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        ensure(res.exit_code == 0, || format!("run {run}: {:?}", res.diagnostics))?;
        trees.push(read_tree(&out));
    }
    ensure(!trees[0].is_empty(), || "empty output tree".into())?;
    ensure(trees[0] == trees[1], || "trees differ".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} files identical, {:.2} s", trees[0].len(), elapsed.as_secs_f64()))
}

fn divergence_band() -> Result<String, String> {
    let lex = saturating_lexicon(7);
    let mut source = Vec::new();
    let mut derived = Vec::new();
    for split in Split::ALL {
        let ds = reference_sized_dataset(Task::IC, split, 7);
        let plan = TransformPlan::new(Mode::Destandardise, 2024, format!("IC/{split}"));
        let out = transform_dataset(&ds, &lex, &plan, false).map_err(|e| e.to_string())?;
        source.extend(ds.text_lines());
        derived.extend(out.text_lines());
    }
    let d = corpus_error_rates(&source, &derived, ErrorRateOptions::default()).map_err(|e| e.to_string())?;
    ensure((60.0..=85.0).contains(&d.wer), || format!("destandardised WER {:.2}", d.wer))?;
    ensure(d.cer < d.wer, || format!("CER {:.2} >= WER {:.2}", d.cer, d.wer))?;

    let mut noisy = Vec::new();
    let mut normalised = Vec::new();
    for split in Split::ALL {
        let ds = reference_sized_dataset(Task::SC, split, 7);
        let plan = TransformPlan::new(Mode::Normalise, 0, format!("SC/{split}"));
        let out = transform_dataset(&ds, &lex, &plan, false).map_err(|e| e.to_string())?;
        noisy.extend(ds.text_lines());
        normalised.extend(out.text_lines());
    }
    let n = corpus_error_rates(&noisy, &normalised, ErrorRateOptions::default()).map_err(|e| e.to_string())?;
    ensure((18.0..=38.0).contains(&n.wer), || format!("normalisation WER {:.2}", n.wer))?;
    Ok(format!(
        "destandardised WER {:.2} CER {:.2}; normalised WER {:.2} CER {:.2}",
        d.wer, d.cer, n.wer, n.cer
    ))
}

fn fuzz_token(r: &mut ChaCha8Rng) -> String {
    const POOL: &[&str] = &[
        "Kont", "Geld", "ass", "as", "mat", "Lëtzebuerg", "Bank", "d'Kaart", "Haus", "gutt", "3.5", ",", ".", "(", "-",
        "Jang-Marie", "e-Mail", "’t", "xyz", "Ëmmer", "déi", "??", "%", "A1",
    ];
    if r.random_bool(0.1) {
        let len = r.random_range(1..6);
        (0..len).map(|_| *['a', 'é', '\'', '.', '7', 'Z', '-', 'ë'].choose(r).unwrap()).collect()
    } else {
        POOL.choose(r).unwrap().to_string()
    }
}

fn alignment_laws() -> Result<String, String> {
    let lex = saturating_lexicon(3);
    let mut r = rng(5);
    let tags = ["O", "B-PER", "B-LOC", "NOUN", "VERB", "PUNCT"];
    let records: Vec<Record> = (0..10_000)
        .map(|i| {
            let n = r.random_range(1..=15);
            let tokens: Vec<String> = (0..n).map(|_| fuzz_token(&mut r)).collect();
            let labels: Vec<String> = (0..n).map(|_| tags.choose(&mut r).unwrap().to_string()).collect();
            Record::token(format!("r{i}"), tokens, labels)
        })
        .collect();
    let ds = Dataset::new(Task::NER, Split::Train, Variant::Std, records).map_err(|e| e.to_string())?;
    let mut violations = 0usize;
    for (mode, force) in [(Mode::Destandardise, false), (Mode::Normalise, true)] {
        let plan = TransformPlan::new(mode, 99, "fuzz");
        let out = transform_dataset(&ds, &lex, &plan, force).map_err(|e| e.to_string())?;
        for (a, b) in ds.records.iter().zip(&out.records) {
            let (dataset::RecordBody::Token { tokens: ta, labels: la }, dataset::RecordBody::Token { tokens: tb, labels: lb }) =
                (&a.body, &b.body)
            else {
                violations += 1;
                continue;
            };
            if tb.len() != lb.len() || tb.len() != ta.len() || la != lb || a.id != b.id {
                violations += 1;
            }
            if tb.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
                violations += 1;
            }
        }
        if out.records.len() != ds.records.len() || out.label_counts() != ds.label_counts() {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok("10000 records x 2 modes, 0 violations".into())
}

fn combine_law() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let lex = saturating_lexicon(7);
    write_native_tree(root, &Task::ALL, None, 7).map_err(|e| e.to_string())?;
    for task in Task::ALL {
        for split in Split::ALL {
            let native_path = dataset::dataset_path(root, task, task.native_variant(), split);
            let native = dataset::read_dataset(&native_path, task, split, task.native_variant()).map_err(|e| e.to_string())?;
            let plan = TransformPlan::new(task.derivation_mode(), 1, format!("{task}/{split}"));
            let derived = transform_dataset(&native, &lex, &plan, false).map_err(|e| e.to_string())?;
            let (std, nstd) = if task.native_variant() == Variant::Std {
                (&native, &derived)
            } else {
                (&derived, &native)
            };
            let comb = combine(std, nstd).map_err(|e| e.to_string())?;
            ensure(comb.len() == std.len() + nstd.len(), || format!("{task}/{split}: |comb| {}", comb.len()))?;
            for ds in [&derived, &comb] {
                dataset::write_dataset(ds, &dataset::dataset_path(root, task, ds.variant, split))
                    .map_err(|e| e.to_string())?;
            }
        }
    }
    let res = cli::run(["variaforge", "--json", "dataset", "stats", "--root", root.to_str().unwrap()]);
    ensure(res.exit_code == 0, || format!("stats failed: {:?}", res.diagnostics))?;
    let doc: serde_json::Value = serde_json::from_str(&res.stdout).map_err(|e| e.to_string())?;
    let rows = doc["result"]["datasets"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 21, || format!("{} rows", rows.len()))?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r["matches_reference"] != true)
        .map(|r| format!("{}/{}", r["task"], r["variant"]))
        .collect();
    ensure(bad.is_empty(), || format!("mismatched: {bad:?}"))?;
    Ok("7 tasks x 3 variants match reference counts".into())
}

fn brute_weighted_f1(gold: &[&str], pred: &[&str]) -> f64 {
    let mut confusion: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        *confusion.entry((g, p)).or_default() += 1;
    }
    let classes: BTreeSet<&str> = gold.iter().chain(pred).copied().collect();
    let mut total = 0.0;
    for &c in &classes {
        let tp = *confusion.get(&(c, c)).unwrap_or(&0) as f64;
        let support: usize = confusion.iter().filter(|((g, _), _)| *g == c).map(|(_, n)| n).sum();
        let predicted: usize = confusion.iter().filter(|((_, p), _)| *p == c).map(|(_, n)| n).sum();
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        total += f1 * support as f64;
    }
    100.0 * total / gold.len() as f64
}

fn weighted_f1_oracle() -> Result<String, String> {
    let mut r = rng(17);
    let labels = ["A", "B", "C", "D", "E"];
    for i in 0..500 {
        let k = r.random_range(1..=labels.len());
        let n = r.random_range(1..=40);
        let gold: Vec<&str> = (0..n).map(|_| labels[r.random_range(0..k)]).collect();
        let pred: Vec<&str> = (0..n).map(|_| labels[r.random_range(0..k)]).collect();
        let got = weighted_f1(&gold, &pred).map_err(|e| e.to_string())?;
        let want = brute_weighted_f1(&gold, &pred);
        ensure((got - want).abs() <= 1e-9, || format!("labeling {i}: {got} vs {want}"))?;
    }
    let hand = weighted_f1(&["A", "A", "B", "B"], &["A", "B", "B", "B"]).map_err(|e| e.to_string())?;
    ensure(format!("{hand:.2}") == "73.33", || format!("hand case {hand}"))?;
    Ok(format!("500 labelings within 1e-9; hand case {hand:.2} %"))
}

fn random_word(r: &mut ChaCha8Rng) -> String {
    let len = r.random_range(2..=7);
    (0..len).map(|_| *['a', 'e', 'i', 'o', 'u', 'k', 'l', 'm', 'r', 's', 't', 'ë', 'é'].choose(r).unwrap()).collect()
}

fn round_trip() -> Result<String, String> {
    let mut r = rng(23);
    let mut used = BTreeSet::new();
    let mut entries = Vec::new();
    let mut standards = Vec::new();
    while standards.len() < 60 {
        let s = random_word(&mut r);
        if !used.insert(s.clone()) {
            continue;
        }
        let mut variants = vec![(s.clone(), r.random_range(1..5u64))];
        for _ in 0..r.random_range(0..4) {
            let v = random_word(&mut r);
            if used.insert(v.clone()) {
                variants.push((v, r.random_range(1..9u64)));
            }
        }
        entries.push(VariantEntry::new(&s, variants).unwrap());
        standards.push(s);
    }
    let lex = VariantLexicon::from_entries(entries, LexiconMetadata::default());
    ensure(lex.is_injective(), || "fixture lexicon is not injective".into())?;
    let forward = TransformPlan::new(Mode::Destandardise, 5, "round-trip");
    let back = TransformPlan::new(Mode::Normalise, 5, "round-trip").with_max_edit_distance(0);
    let mut changed = 0usize;
    for i in 0..1000u64 {
        let n = r.random_range(1..12);
        let line = (0..n)
            .map(|_| {
                let w = standards.choose(&mut r).unwrap().clone();
                if r.random_bool(0.2) {
                    format!("{w},")
                } else {
                    w
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        let noisy = transform_line(&line, &lex, &forward, i);
        if noisy != line {
            changed += 1;
        }
        let restored = normalise_line(&noisy, &lex, &back);
        ensure(restored == line, || format!("line {i}: {line:?} -> {noisy:?} -> {restored:?}"))?;
    }
    ensure(changed > 500, || format!("only {changed} lines changed"))?;
    Ok(format!("1000 lines restored ({changed} changed in between)"))
}

fn matrix_rendering() -> Result<String, String> {
    let c = 2.18 / 2.5f64.sqrt();
    let mut records = Vec::new();
    for train in Variant::ALL {
        for test in Variant::ALL {
            for (seed, k) in (1..=5).zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
                records.push(ScoreRecord::new("SC", train, test, seed, 57.97 + c * k));
            }
        }
    }
    let m = render_matrix(&records, metrics::DEFAULT_MODEL, "SC").map_err(|e| e.to_string())?;
    for train in Variant::ALL {
        for test in Variant::ALL {
            let cell = m.cell(train, test).ok_or("missing cell")?;
            ensure(cell.text == "57.97 ± 2.18", || format!("{train}->{test}: {:?}", cell.text))?;
        }
    }
    Ok("9 cells render \"57.97 ± 2.18\"".into())
}

fn language_card() -> Result<String, String> {
    let v = validate_card(LUXEMBOURGISH_CARD).map_err(|e| e.to_string())?;
    ensure(v.is_empty(), || format!("shipped card: {v:?}"))?;
    let doc: serde_yaml::Value = serde_yaml::from_str(LUXEMBOURGISH_CARD).map_err(|e| e.to_string())?;
    for key in CRITERIA {
        let mut d = doc.clone();
        d["criteria"].as_mapping_mut().ok_or("criteria")?.remove(key);
        let text = serde_yaml::to_string(&d).map_err(|e| e.to_string())?;
        let v = validate_card(&text).map_err(|e| e.to_string())?;
        ensure(v.len() == 1, || format!("without {key}: {v:?}"))?;
    }
    Ok(format!("0 violations; each of {} deletions gives exactly 1", CRITERIA.len()))
}

fn main() {
    let checks: &[(&str, Check)] = &[
        ("edit-distance oracle", edit_distance_oracle),
        ("frequency fidelity", frequency_fidelity),
        ("determinism", determinism),
        ("divergence band", divergence_band),
        ("alignment & label laws", alignment_laws),
        ("combine law", combine_law),
        ("weighted-F1 oracle", weighted_f1_oracle),
        ("round-trip", round_trip),
        ("matrix rendering", matrix_rendering),
        ("language card", language_card),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name:<24} {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<24} {detail}");
            }
        }
    }
    let _ = panic::take_hook();
    println!("{}/{} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
