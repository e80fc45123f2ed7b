//! Hard rules: clauses that hold on every small fragment of the data.
//!
//! cargo run --example hard_rules

use possrel::data::parse_example;
use possrel::structure::{hard_rule_candidates, learn_hard_rules, HardRuleConfig};

const DATA: &str = "\
fr(alice,bob)
fr(bob,alice)
fr(bob,eve)
fr(eve,bob)
sm(alice)
ca(alice)
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ex = parse_example(DATA, None)?;
    let cfg = HardRuleConfig { t: 2, t_prime: 3, k: 2 };
    println!("{} candidate clauses", hard_rule_candidates(&ex, &cfg).len());
    for c in learn_hard_rules(&ex, &cfg)? {
        println!("{}", c.display(ex.symbols()));
    }
    Ok(())
}
