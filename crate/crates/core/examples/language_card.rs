//! Validates and renders the shipped language card, then shows what a fresh
//! template still needs.
//!
//! ```text
//! cargo run --example language_card
//! ```

use variaforge::card::{new_card_template, parse_card, render_card, validate_card, LUXEMBOURGISH_CARD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let violations = validate_card(LUXEMBOURGISH_CARD)?;
    println!("shipped card: {} violations\n", violations.len());
    print!("{}", render_card(&parse_card(LUXEMBOURGISH_CARD)?));

    let template = new_card_template("Alsatian")?;
    let todo = validate_card(&template)?;
    println!("\ntemplate for Alsatian: {} fields to fill in", todo.len());
    for v in todo.iter().take(3) {
        println!("  {v}");
    }
    Ok(())
}
