//! Labeled examples for one predicate and a beam search for Horn rules
//! that separate them.
//!
//! cargo run --release --example rule_search

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use possrel::data::parse_example;
use possrel::logic::Predicate;
use possrel::structure::{beam_search, build_examples, BeamConfig, ExampleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut text = String::new();
    for i in 0..12 {
        let j = (i + 1) % 12;
        text.push_str(&format!("fr(p{i},p{j})\nfr(p{j},p{i})\n"));
        if i < 5 {
            text.push_str(&format!("sm(p{i})\n"));
        }
        if i < 7 {
            text.push_str(&format!("ca(p{i})\n"));
        }
    }
    let ex = parse_example(&text, None)?;
    let target = Predicate::new("ca", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let examples = build_examples(&ex, &[], &target, &ExampleConfig::default(), &mut rng)?;
    println!(
        "{}: {} positives, {} negatives (weight {:.2})",
        target,
        examples.positives.len(),
        examples.negatives.len(),
        examples.w_neg
    );

    let cfg = BeamConfig { b: 5, l: 2, k: 2, restarts: 2 };
    for r in beam_search(&ex, &examples, &cfg)? {
        println!(
            "{:.3}  {}  (+{} -{})",
            r.accuracy,
            r.rule.to_clause().display(ex.symbols()),
            r.covered_pos,
            r.covered_neg
        );
    }
    Ok(())
}
