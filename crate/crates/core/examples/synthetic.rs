//! Sample training and test worlds from a known theory, learn a theory back
//! from the training world and compare it with the all-false baseline.
//!
//! cargo run --release --example synthetic

use std::collections::BTreeSet;
use std::time::Instant;

use possrel::counting::CountingPolicy;
use possrel::logic::{Predicate, Symbols};
use possrel::pipeline::{evaluate, learn_theory, synth_generate, EvalConfig, Learned, PipelineConfig};
use possrel::possibilistic::parse_theory;

const GENERATOR: &str = "\
1.0 :: !fr(A,A)
1.0 :: !fr(A,B) v fr(B,A)
0.99999 :: !ca(A) v !fr(A,B) v ca(B)
0.99999 :: !sm(A) v ca(A)
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generator = parse_theory(GENERATOR, &mut Symbols::new())?;
    let sig: BTreeSet<Predicate> =
        [Predicate::new("sm", 1), Predicate::new("ca", 1), Predicate::new("fr", 2)].into_iter().collect();
    let policy = CountingPolicy::default();

    let t = Instant::now();
    let train = synth_generate(&generator, &sig, 8, 1, &policy)?;
    let test = synth_generate(&generator, &sig, 8, 2, &policy)?;
    println!("sampled two worlds ({} and {} atoms) in {:.1?}", train.atoms().len(), test.atoms().len(), t.elapsed());
    print!("{}", train.to_text());

    let t = Instant::now();
    let mut cfg = PipelineConfig::default();
    cfg.set("k", "2")?;
    let mut learned = Learned::default();
    learn_theory(&train, &cfg, &mut learned)?;
    let theory = learned.best_theory();
    println!("\nlearned in {:.1?}:", t.elapsed());
    print!("{}", theory.to_text(train.symbols()));

    let t = Instant::now();
    let report = evaluate(&theory, &test, &EvalConfig::default())?;
    println!("\nevaluated in {:.1?}", t.elapsed());
    println!("{:>3} {:>8} {:>8}", "s", "theory", "baseline");
    for r in &report.rows {
        println!("{:>3} {:>8.2} {:>8.2}", r.s, r.theory_error, r.baseline_error);
    }
    Ok(())
}
