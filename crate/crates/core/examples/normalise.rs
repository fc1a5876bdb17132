//! Maps non-standard spellings back to standard forms: inverse lexicon hits
//! first, then the nearest standard form within the edit-distance limit.
//!
//! ```text
//! cargo run --example normalise
//! ```

use variaforge::fixtures::saturating_lexicon;
use variaforge::metrics::{corpus_error_rates, ErrorRateOptions};
use variaforge::transform::{normalise_line, Mode, TransformPlan};

const NOISY: &[&str] = &[
    "Elo iwwer middd Gesondheet midd goe?",
    "Wieder grous ass en kafen no bei mur Bank.",
    "Regierrung huet Spuerkeesss gefrot.",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = saturating_lexicon(7);
    for k in [0, 2] {
        let plan = TransformPlan::new(Mode::Normalise, 0, "example").with_max_edit_distance(k);
        let normalised: Vec<String> = NOISY.iter().map(|l| normalise_line(l, &lexicon, &plan)).collect();
        println!("max edit distance {k}:");
        for (a, b) in NOISY.iter().zip(&normalised) {
            println!("  {a}\n  {b}");
        }
        let report = corpus_error_rates(NOISY, &normalised, ErrorRateOptions::default())?;
        println!("  words changed: WER {:.2} %", report.wer);
    }
    Ok(())
}
