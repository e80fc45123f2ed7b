//! The building blocks: grounding to CNF, the SAT solver, conjunctive
//! queries with parity constraints and GF(2) elimination.
//!
//! cargo run --example sat_query

use possrel::data::parse_example;
use possrel::logic::{atom, parse_clause, var, Constant, Literal, Symbols, Variable};
use possrel::query::{csp_query, for_each_solution, Budget, ConjunctiveQuery, Constraint, Gf2System, XorConstraint};
use possrel::sat::{entails, ground_to_cnf, solve};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut sym = Symbols::new();
    for c in ["a", "b", "c"] {
        sym.intern(c);
    }
    let rules =
        vec![parse_clause("!fr(A,B) v fr(B,A)", &mut sym)?, parse_clause("!fr(A,B) v !fr(B,C) v fr(A,C)", &mut sym)?];
    let constants: Vec<Constant> = sym.constants().collect();
    let cnf =
        ground_to_cnf(&rules, &constants, &[Literal::pos(possrel::logic::parse_ground_atom("fr(a,b)", &mut sym)?)]);
    println!("{} variables, {} clauses", cnf.n_vars(), cnf.clauses().len());
    if let Some(w) = solve(&cnf).witness {
        let shown: Vec<String> = w.iter().map(|a| a.display(&sym).to_string()).collect();
        println!("a model: {}", shown.join(" "));
    }
    for text in ["!fr(A,B) v !fr(B,C) v fr(C,A)", "!fr(A,B) v fr(A,C)"] {
        let c = parse_clause(text, &mut sym)?;
        println!("entails {}: {}", c.display(&sym), entails(&rules, &constants, &c));
    }

    let ex = parse_example("r(a,b)\nr(b,c)\nr(c,a)\nr(a,c)\np(b)\n", None)?;
    let mut q =
        ConjunctiveQuery::new(vec![Literal::pos(atom("r", &[var(0), var(1)])), Literal::pos(atom("p", &[var(1)]))]);
    q.add_constraint(Constraint::AllDiff(vec![Variable(0), Variable(1)]));
    let xs = csp_query(&q, Variable(0), ex.index())?;
    let names: Vec<&str> = xs.iter().map(|&c| ex.symbols().name(c)).collect();
    println!("\nX with r(X,Y), p(Y): {names:?}");

    // the same query restricted to solutions whose used constants have even parity on {a, b}
    let xor = XorConstraint::new(vec![0, 1], false);
    let mut budget = Budget::unlimited();
    for_each_solution(&q, ex.index(), std::slice::from_ref(&xor), &mut budget, |s| {
        let used: Vec<&str> = s.used_constants().into_iter().map(|c| ex.symbols().name(c)).collect();
        println!("  parity solution {used:?}");
        std::ops::ControlFlow::Continue(())
    })?;

    let rows = [XorConstraint::new([0, 1], true), XorConstraint::new([1, 2], false), XorConstraint::new([0, 2], true)];
    let mut sys = Gf2System::new(3, &rows);
    println!("\nrank after elimination: {:?}", sys.eliminate());
    let mut bad = Gf2System::new(3, &[rows[0].clone(), rows[1].clone(), XorConstraint::new([0, 2], false)]);
    println!("contradictory system: {:?}", bad.eliminate().is_err());
    Ok(())
}
