//! MAP inference: the highest stratum cut consistent with the evidence, and
//! the atoms it entails.
//!
//! cargo run --example inference

use possrel::data::parse_evidence;
use possrel::logic::{parse_ground_atom, Symbols};
use possrel::possibilistic::{parse_theory, MapState};

const THEORY: &str = "\
1.0 :: !fr(A,B) v fr(B,A)
0.9 :: !sm(A) v ca(A)
0.7 :: !ca(A) v !fr(A,B) v ca(B)
0.4 :: !ca(A)
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut sym = Symbols::new();
    let theory = parse_theory(THEORY, &mut sym)?;
    let evidence = parse_evidence("sm(ann)\nfr(ann,bob)\n!ca(cid)\n", &mut sym)?;
    sym.intern("cid");
    let constants: Vec<_> = sym.constants().collect();

    let mut state = MapState::new(&theory, &evidence, &constants)?;
    println!("cutoff level {:?} after {} SAT calls", state.cutoff.level, state.cutoff.sat_calls);
    for q in ["ca(ann)", "ca(bob)", "fr(bob,ann)", "ca(cid)", "sm(bob)"] {
        let a = parse_ground_atom(q, &mut sym)?;
        println!("{q:<12} {}", state.entails(&a));
    }
    Ok(())
}
