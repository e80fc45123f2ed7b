//! Counting the constant subsets that match a query, four ways, and counting
//! the models of a theory over a small language.
//!
//! cargo run --release --example counting

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use possrel::counting::{
    count_sampled, count_xor_approx, matching_subsets_alg1, matching_subsets_naive, model_count, CountingPolicy,
    ModelCountMode, SubsetTask,
};
use possrel::data::parse_example;
use possrel::logic::{atom, parse_clause, var, Literal, Symbols};
use possrel::query::ConjunctiveQuery;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut text = String::from("@constants");
    for i in 0..24 {
        text.push_str(&format!(" c{i}"));
    }
    text.push('\n');
    for i in 0..24 {
        if i % 3 == 0 {
            text.push_str(&format!("p(c{i})\n"));
        }
        text.push_str(&format!("r(c{i},c{})\n", (i * 7 + 3) % 24));
    }
    let ex = parse_example(&text, None)?;
    // ∃X,Y: p(X) ∧ r(X,Y), over 3-subsets
    let q = ConjunctiveQuery::new(vec![Literal::pos(atom("p", &[var(0)])), Literal::pos(atom("r", &[var(0), var(1)]))]);
    let task = SubsetTask::new(&q, 3);
    let policy = CountingPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let t = Instant::now();
    let naive = matching_subsets_naive(&ex, &task, None)?;
    println!("naive      {:>8} in {:.1?}", naive.len(), t.elapsed());
    let t = Instant::now();
    let (alg1, stats) = matching_subsets_alg1(&ex, &task, &[], None)?;
    println!("alg1       {:>8} in {:.1?} ({} CSP calls)", alg1.len(), t.elapsed(), stats.csp_calls);
    let t = Instant::now();
    let (sampled, _) = count_sampled(&ex, &task, &policy, &mut rng)?;
    let (lo, hi) = sampled.ci.unwrap_or_default();
    println!("sampled    {:>8.1} in {:.1?} (95% interval {lo:.1}..{hi:.1})", sampled.value, t.elapsed());
    let t = Instant::now();
    let hashed = count_xor_approx(&ex, &task, &policy, &mut rng)?;
    println!("xor hash   {:>8.1} in {:.1?}", hashed.value, t.elapsed());

    let mut sym = Symbols::new();
    let rules = vec![parse_clause("!sm(A) v ca(A)", &mut sym)?, parse_clause("!fr(A,B) v fr(B,A)", &mut sym)?];
    let sig = rules.iter().flat_map(|c| c.literals().iter().map(|l| l.atom.predicate.clone())).collect();
    for k in 1..=3 {
        let r = model_count(&rules, &sig, k, ModelCountMode::Ground, &policy, &mut rng)?;
        println!("models over {k} constants: {} ({})", r.value, r.method.name());
    }
    Ok(())
}
