use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

use rand::Rng;

use super::approx::{approx_mc, CellOracle};
use super::{CountError, CountMethod, CountReport, CountingPolicy};
use crate::data::language_atoms;
use crate::logic::{Atom, Clause, Constant, Predicate, Substitution, Term};
use crate::query::{for_each_solution, AtomIndex, Budget, ConjunctiveQuery, XorConstraint};
use crate::sat::{count_models, GroundCNF, Lit, SolveResult, Solver};

/// Languages with at most this many ground atoms are counted exactly.
pub const EXACT_MODEL_ATOMS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelCountMode {
    /// Ground every formula up front.
    Ground,
    /// Ground a formula instance only once a candidate model violates it.
    CuttingPlane,
}

fn full_signature(formulas: &[Clause], signature: &BTreeSet<Predicate>) -> BTreeSet<Predicate> {
    let mut sig = signature.clone();
    for f in formulas {
        for l in f.literals() {
            sig.insert(l.atom.predicate.clone());
        }
    }
    sig
}

fn constants(k: usize) -> Vec<Constant> {
    (0..k as u32).map(Constant).collect()
}

fn enumerate(s: &mut Solver, n_atoms: usize, limit: usize) -> usize {
    let mut count = 0;
    while count <= limit && s.solve() == SolveResult::Sat {
        count += 1;
        let block: Vec<Lit> = (0..n_atoms).map(|v| Lit::new(v, !s.model_value(v))).collect();
        s.add_clause(&block);
    }
    count
}

/// Worlds over the width-k language satisfying every grounding, counted
/// exactly.
pub fn model_count_exact(formulas: &[Clause], signature: &BTreeSet<Predicate>, k: usize) -> u128 {
    let atoms = language_atoms(&full_signature(formulas, signature), k);
    let mut cnf = GroundCNF::with_atoms(&atoms);
    for f in formulas {
        cnf.add_grounded(f, &constants(k));
    }
    count_models(cnf.n_vars(), cnf.clauses())
}

pub struct GroundCells {
    cnf: GroundCNF,
}

impl GroundCells {
    pub fn new(formulas: &[Clause], signature: &BTreeSet<Predicate>, k: usize) -> Self {
        let atoms = language_atoms(&full_signature(formulas, signature), k);
        let mut cnf = GroundCNF::with_atoms(&atoms);
        for f in formulas {
            cnf.add_grounded(f, &constants(k));
        }
        GroundCells { cnf }
    }
}

impl CellOracle for GroundCells {
    fn width(&self) -> usize {
        self.cnf.n_vars()
    }

    fn bounded_count(&mut self, xors: &[XorConstraint], limit: usize) -> Result<usize, CountError> {
        let mut s = self.cnf.solver();
        s.add_xors(xors);
        Ok(enumerate(&mut s, self.cnf.n_vars(), limit))
    }
}

/// Cells of the model set with lazily grounded formulas. Groundings found
/// violated persist across calls.
pub struct LazyCells {
    formulas: Vec<Clause>,
    negations: Vec<ConjunctiveQuery>,
    k: usize,
    atoms: Vec<Atom>,
    table: HashMap<Atom, usize>,
    active: Vec<Vec<Lit>>,
    known: HashSet<Vec<Lit>>,
}

impl LazyCells {
    pub fn new(formulas: &[Clause], signature: &BTreeSet<Predicate>, k: usize) -> Self {
        let atoms = language_atoms(&full_signature(formulas, signature), k);
        let table = atoms.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        LazyCells {
            formulas: formulas.to_vec(),
            negations: formulas.iter().map(ConjunctiveQuery::negation_of).collect(),
            k,
            atoms,
            table,
            active: Vec::new(),
            known: HashSet::new(),
        }
    }

    /// Ground clauses added so far.
    pub fn grounded(&self) -> usize {
        self.active.len()
    }

    /// Groundings violated by the world, as literal lists.
    fn violated(&self, world: &[bool]) -> Vec<Vec<Lit>> {
        let index = AtomIndex::new(self.k, self.atoms.iter().zip(world).filter(|(_, &t)| t).map(|(a, _)| a));
        let mut out = Vec::new();
        for (f, q) in self.formulas.iter().zip(&self.negations) {
            for_each_solution(q, &index, &[], &mut Budget::unlimited(), |sol| {
                let theta = Substitution::from_pairs(sol.assignment.iter().map(|(&v, &c)| (v, Term::Const(c))));
                let g = f.substitute(&theta);
                let mut lits: Vec<Lit> =
                    g.literals().iter().map(|l| Lit::new(self.table[&l.atom], l.positive)).collect();
                lits.sort_unstable();
                lits.dedup();
                out.push(lits);
                ControlFlow::Continue(())
            })
            .expect("unlimited budget");
        }
        out
    }
}

impl CellOracle for LazyCells {
    fn width(&self) -> usize {
        self.atoms.len()
    }

    fn bounded_count(&mut self, xors: &[XorConstraint], limit: usize) -> Result<usize, CountError> {
        let n = self.atoms.len();
        let mut s = Solver::with_vars(n);
        for c in &self.active {
            s.add_clause(c);
        }
        s.add_xors(xors);
        let mut count = 0;
        while count <= limit && s.solve() == SolveResult::Sat {
            let world: Vec<bool> = (0..n).map(|v| s.model_value(v)).collect();
            let violated = self.violated(&world);
            if violated.is_empty() {
                count += 1;
                let block: Vec<Lit> = (0..n).map(|v| Lit::new(v, !world[v])).collect();
                s.add_clause(&block);
                continue;
            }
            for c in violated {
                if self.known.insert(c.clone()) {
                    s.add_clause(&c);
                    self.active.push(c);
                }
            }
        }
        Ok(count)
    }
}

/// Model count of the formulas over the width-k language: exact up to
/// `EXACT_MODEL_ATOMS` ground atoms, hashing-based above.
pub fn model_count<R: Rng + ?Sized>(
    formulas: &[Clause],
    signature: &BTreeSet<Predicate>,
    k: usize,
    mode: ModelCountMode,
    policy: &CountingPolicy,
    rng: &mut R,
) -> Result<CountReport, CountError> {
    if language_atoms(&full_signature(formulas, signature), k).len() <= EXACT_MODEL_ATOMS {
        return Ok(CountReport::exact(model_count_exact(formulas, signature, k), CountMethod::ExactDpll));
    }
    model_count_xor(formulas, signature, k, mode, policy, rng)
}

/// Hashing-based model count regardless of size.
pub fn model_count_xor<R: Rng + ?Sized>(
    formulas: &[Clause],
    signature: &BTreeSet<Predicate>,
    k: usize,
    mode: ModelCountMode,
    policy: &CountingPolicy,
    rng: &mut R,
) -> Result<CountReport, CountError> {
    let cap = 2 * policy.exact_limit_small;
    let out = match mode {
        ModelCountMode::Ground => {
            approx_mc(&mut GroundCells::new(formulas, signature, k), policy.epsilon, policy.delta, cap, rng)?
        }
        ModelCountMode::CuttingPlane => {
            approx_mc(&mut LazyCells::new(formulas, signature, k), policy.epsilon, policy.delta, cap, rng)?
        }
    };
    Ok(CountReport {
        value: out.estimate,
        method: CountMethod::XorApprox,
        epsilon: Some(policy.epsilon),
        delta: Some(policy.delta),
        ci: None,
    })
}
