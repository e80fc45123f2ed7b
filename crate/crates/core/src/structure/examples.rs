use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

use rand::seq::index;
use rand::Rng;

use super::StructureError;
use crate::data::GlobalExample;
use crate::logic::{Atom, Clause, Constant, Predicate, Substitution, Term};
use crate::query::{for_each_solution, AtomIndex, Budget, ConjunctiveQuery};
use crate::sat::{Lit, SolveResult, Solver};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativeCheck {
    /// Atoms outside the data and the candidate are free.
    OpenWorld,
    /// The data plus the candidate must satisfy Δ as a fixed world.
    ClosedWorld,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleConfig {
    /// Negative candidates drawn per predicate.
    pub budget: usize,
    /// Subsample size for positives; all positives when `None`.
    pub positive_budget: Option<usize>,
    pub check: NegativeCheck,
}

impl Default for ExampleConfig {
    fn default() -> Self {
        ExampleConfig { budget: 500, positive_budget: None, check: NegativeCheck::OpenWorld }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExampleSet {
    pub predicate: Predicate,
    pub positives: Vec<Atom>,
    pub negatives: Vec<Atom>,
    /// Weight of each negative.
    pub w_neg: f64,
    pub n_nontrivial_est: f64,
    pub attempted: usize,
}

/// Groundings of `delta` that `world` violates, as ground clauses.
fn violations(delta: &[Clause], negations: &[ConjunctiveQuery], world: &AtomIndex) -> Vec<Clause> {
    let mut out = Vec::new();
    for (c, q) in delta.iter().zip(negations) {
        for_each_solution(q, world, &[], &mut Budget::unlimited(), |sol| {
            let theta = Substitution::from_pairs(sol.assignment.iter().map(|(&v, &c)| (v, Term::Const(c))));
            out.push(c.substitute(&theta));
            ControlFlow::Continue(())
        })
        .expect("unlimited budget");
    }
    out
}

/// Is `a` a non-trivial negative: does the data plus `a` extend to a model
/// of Δ (open world), or satisfy Δ outright (closed world)?
pub fn nontrivial(ex: &GlobalExample, delta: &[Clause], a: &Atom, check: NegativeCheck) -> bool {
    let negations: Vec<ConjunctiveQuery> = delta.iter().map(ConjunctiveQuery::negation_of).collect();
    let mut world = ex.index().clone();
    world.insert(a);
    let first = violations(delta, &negations, &world);
    if first.is_empty() {
        return true;
    }
    if check == NegativeCheck::ClosedWorld {
        return false;
    }
    // lazy grounding: only groundings some candidate model violates enter
    // the solver; atoms never mentioned stay false
    let fixed = |x: &Atom| x == a || ex.contains(x);
    let mut vars: HashMap<Atom, usize> = HashMap::new();
    let mut solver = Solver::new();
    let mut known: HashSet<Clause> = HashSet::new();
    let mut pending = first;
    loop {
        for g in pending.drain(..) {
            if !known.insert(g.clone()) {
                continue;
            }
            let mut lits = Vec::new();
            for l in g.literals() {
                let v = *vars.entry(l.atom.clone()).or_insert_with(|| {
                    let v = solver.new_var();
                    if fixed(&l.atom) {
                        solver.add_clause(&[Lit::new(v, true)]);
                    }
                    v
                });
                lits.push(Lit::new(v, l.positive));
            }
            solver.add_clause(&lits);
        }
        if solver.solve() != SolveResult::Sat {
            return false;
        }
        let mut world = ex.index().clone();
        world.insert(a);
        for (x, &v) in &vars {
            if solver.model_value(v) {
                world.insert(x);
            }
        }
        pending = violations(delta, &negations, &world);
        if pending.is_empty() {
            return true;
        }
    }
}

fn tuple(idx: usize, n: usize, arity: usize) -> Vec<Constant> {
    let mut out = vec![Constant(0); arity];
    let mut x = idx;
    for slot in out.iter_mut().rev() {
        *slot = Constant((x % n) as u32);
        x /= n;
    }
    out
}

/// Positives are the true P-atoms; negatives are sampled false P-atoms that
/// pass the non-triviality check against Δ.
pub fn build_examples<R: Rng + ?Sized>(
    ex: &GlobalExample,
    delta: &[Clause],
    p: &Predicate,
    cfg: &ExampleConfig,
    rng: &mut R,
) -> Result<LabeledExampleSet, StructureError> {
    if !ex.signature().contains(p) {
        return Err(StructureError::UnknownPredicate(p.clone()));
    }
    let mut positives: Vec<Atom> = ex.atoms_of(p).cloned().collect();
    if positives.is_empty() {
        return Err(StructureError::Degenerate(p.clone()));
    }
    let n_true = positives.len();
    if let Some(b) = cfg.positive_budget {
        if b < positives.len() {
            let mut keep = index::sample(rng, positives.len(), b).into_vec();
            keep.sort_unstable();
            positives = keep.into_iter().map(|i| positives[i].clone()).collect();
        }
    }
    let n = ex.n_constants();
    let space = n.checked_pow(p.arity() as u32).unwrap_or(usize::MAX);
    let n_false = space - n_true;
    let candidates: Vec<Atom> = if n_false <= cfg.budget {
        (0..space).map(|i| Atom::ground(p.clone(), &tuple(i, n, p.arity()))).filter(|a| !ex.contains(a)).collect()
    } else {
        let mut drawn = BTreeSet::new();
        while drawn.len() < cfg.budget {
            let a = Atom::ground(p.clone(), &tuple(rng.gen_range(0..space), n, p.arity()));
            if !ex.contains(&a) {
                drawn.insert(a);
            }
        }
        drawn.into_iter().collect()
    };
    let attempted = candidates.len();
    let negatives: Vec<Atom> = candidates.into_iter().filter(|a| nontrivial(ex, delta, a, cfg.check)).collect();
    let n_nontrivial_est =
        if attempted == 0 { 0.0 } else { negatives.len() as f64 / attempted as f64 * n_false as f64 };
    let w_neg = if negatives.is_empty() { 0.0 } else { n_nontrivial_est / negatives.len() as f64 };
    Ok(LabeledExampleSet { predicate: p.clone(), positives, negatives, w_neg, n_nontrivial_est, attempted })
}
