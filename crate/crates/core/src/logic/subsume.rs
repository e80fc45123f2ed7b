use std::collections::HashMap;

use super::{Atom, Clause, Constant, Predicate, Term};
use crate::query::{satisfiable, AtomIndex, ConjunctiveQuery, Constraint};

fn signed(pred: &Predicate, positive: bool) -> Predicate {
    Predicate::new(&format!("{}{}", if positive { '+' } else { '-' }, pred.name()), pred.arity())
}

/// Is there a substitution θ with `c1`θ ⊆ `c2`?
///
/// When `c1` carries AllDiff, θ must be injective; such a clause only
/// subsumes clauses that carry AllDiff themselves.
pub fn theta_subsumes(c1: &Clause, c2: &Clause) -> bool {
    let c1_vars = c1.variables();
    let injective = c1.all_diff() && c1_vars.len() > 1;
    if injective && !c2.all_diff() {
        return false;
    }
    // the terms of c2 become the constants of the data
    let mut ids: HashMap<Term, u32> = HashMap::new();
    let mut data = Vec::new();
    for l in c2.literals() {
        let args: Vec<Term> = l
            .atom
            .args
            .iter()
            .map(|&t| {
                let n = ids.len() as u32;
                Term::Const(Constant(*ids.entry(t).or_insert(n)))
            })
            .collect();
        data.push(Atom::new(signed(&l.atom.predicate, l.positive), args));
    }
    let index = AtomIndex::new(ids.len(), &data);
    let mut query = Vec::new();
    for l in c1.literals() {
        let mut args = Vec::with_capacity(l.atom.args.len());
        for &t in &l.atom.args {
            match t {
                Term::Var(_) => args.push(t),
                Term::Const(_) => match ids.get(&t) {
                    Some(&id) => args.push(Term::Const(Constant(id))),
                    None => return false,
                },
            }
        }
        query.push(Atom::new(signed(&l.atom.predicate, l.positive), args));
    }
    let mut q = ConjunctiveQuery::from_atoms(query);
    if injective {
        q.add_constraint(Constraint::AllDiff(c1_vars));
    }
    satisfiable(&q, &index)
}
