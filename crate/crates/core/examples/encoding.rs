//! The friends-and-smokers example: a fragment, its isomorphism class, the
//! width-2 marginal distribution and the stratified theory that encodes it.
//!
//! cargo run --example encoding

use std::collections::BTreeSet;

use possrel::data::{fragment, local_class, marginal_distribution, parse_example};
use possrel::logic::Symbols;
use possrel::possibilistic::{exact_encoding, possibility};

const DATA: &str = "\
fr(alice,bob)
fr(bob,alice)
fr(bob,eve)
fr(eve,bob)
sm(alice)
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ex = parse_example(DATA, None)?;
    let sym = ex.symbols();
    let s: BTreeSet<_> = ["alice", "bob"].iter().map(|n| sym.get(n).unwrap()).collect();

    let frag = fragment(&ex, &s)?;
    let atoms: Vec<String> = frag.atoms.iter().map(|a| a.display(sym).to_string()).collect();
    println!("fragment on {{alice, bob}}: {}", atoms.join(", "));
    for w in local_class(&ex, &s)? {
        println!("  class member {w}");
    }

    let dist = marginal_distribution(&ex, 2)?;
    println!("\nmarginal over 2-subsets:");
    for (w, p) in &dist {
        println!("  {p:.4}  {w}");
    }

    let theory = exact_encoding(&ex, 2)?;
    let hard = theory.formulas().iter().filter(|f| f.weight == 1.0).count();
    println!("\nencoding: {hard} hard formulas excluding unseen classes, and");
    let sym2 = Symbols::numbered(2);
    for f in theory.formulas().iter().filter(|f| f.weight < 1.0) {
        println!("  {:.4} :: {}", f.weight, f.clause.display(&sym2));
    }
    for (w, p) in &dist {
        println!("  π = {:.4}, P = {p:.4}", possibility(&theory, w));
    }
    Ok(())
}
