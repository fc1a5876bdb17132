//! Support-weighted F1 over classification labels.
//!
//! ```text
//! cargo run --example weighted_f1
//! ```

use variaforge::metrics::weighted_f1;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold = ["A", "A", "B", "B"];
    let pred = ["A", "B", "B", "B"];
    println!("{:?} vs {:?}: {:.2} %", gold, pred, weighted_f1(&gold, &pred)?);

    let gold = ["B-PER", "O", "O", "B-LOC", "O", "O"];
    let pred = ["B-PER", "O", "B-LOC", "B-LOC", "O", "B-PER"];
    println!("token tags: {:.2} %", weighted_f1(&gold, &pred)?);
    Ok(())
}
