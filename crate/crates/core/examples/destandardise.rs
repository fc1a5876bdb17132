//! Samples spelling variants into standard text. The same seed always gives
//! the same output; another seed gives another sample.
//!
//! ```text
//! cargo run --example destandardise [-- <seed>]
//! ```

use variaforge::fixtures::saturating_lexicon;
use variaforge::transform::{transform_text, Mode, TransformPlan};

const TEXT: &str = "Gudde Moien, ech sinn an der Bank.\nD'Regierung huet gutt geschafft!";

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let lexicon = saturating_lexicon(7);
    let plan = TransformPlan::new(Mode::Destandardise, seed, "example");
    println!("{TEXT}\n--- seed {seed} ---");
    println!("{}", transform_text(TEXT, &lexicon, &plan, 0));
    assert_eq!(transform_text(TEXT, &lexicon, &plan, 0), transform_text(TEXT, &lexicon, &plan, 0));
}
