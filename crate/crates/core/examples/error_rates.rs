//! Word and character error rates with their edit breakdown.
//!
//! ```text
//! cargo run --example error_rates
//! ```

use variaforge::metrics::{align, cer, corpus_error_rates, wer, Averaging, ErrorRateOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = ["ech", "sinn", "haut", "doheem"];
    let hypothesis = ["ech", "sin", "doheem", "haut"];
    let w = wer(&reference, &hypothesis)?;
    println!("WER {:.2} % ({:?})", w.rate(), align(&reference, &hypothesis));
    println!("CER {:.2} %", cer("doheem", "doheim")?);

    let refs = ["Moien, wéi geet et?", "Gutt, merci."];
    let hyps = ["Moin, wie geet et ?", "Gudd, merci."];
    for (name, opts) in [
        ("micro", ErrorRateOptions::default()),
        (
            "macro",
            ErrorRateOptions {
                averaging: Averaging::Macro,
                ..Default::default()
            },
        ),
        (
            "words only",
            ErrorRateOptions {
                words_only: true,
                ..Default::default()
            },
        ),
    ] {
        let r = corpus_error_rates(&refs, &hyps, opts)?;
        println!("{name:<11} WER {:6.2} %  CER {:6.2} %", r.wer, r.cer);
    }
    Ok(())
}
