//! Weight learning: greedy insertion of candidate rules into a stratified
//! theory, each step refitting the weights by geometric programming.
//!
//! cargo run --release --example weights

use possrel::counting::{CountingPolicy, ModelCountMode};
use possrel::data::parse_example;
use possrel::logic::{parse_clause, HornRule, Symbols};
use possrel::weights::{greedy_build, simplify, GreedyConfig, ParamEstimator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut text = String::new();
    for i in 0..10 {
        text.push_str(&format!("fr(p{i},p{})\nfr(p{},p{i})\n", (i + 1) % 10, (i + 1) % 10));
        if i < 4 {
            text.push_str(&format!("sm(p{i})\nca(p{i})\n"));
        }
    }
    let ex = parse_example(&text, None)?;
    let mut sym = ex.symbols().clone();
    let hard = vec![parse_clause("!fr(A,B) v fr(B,A)", &mut sym)?];
    let candidates: Vec<HornRule> = ["ca(A) v !sm(A)", "sm(A) v !ca(A)", "ca(A) v !fr(A,B)"]
        .iter()
        .map(|t| parse_clause(t, &mut sym).map(|c| HornRule::from_clause(&c).expect("horn")))
        .collect::<Result<_, _>>()?;

    let mut est = ParamEstimator::new(&ex, &hard, 2, CountingPolicy::default(), ModelCountMode::Ground, 0);
    let outcome = greedy_build(&candidates, &mut est, &GreedyConfig::default())?;
    for s in &outcome.steps {
        println!("{}", s.log_line());
    }
    println!("\nlikelihood trace: {:?}", outcome.trace);
    println!("\ntheory:");
    print!("{}", simplify(&outcome.theory, 2).to_text(&Symbols::new()));
    Ok(())
}
