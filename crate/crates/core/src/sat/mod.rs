//! Grounding of first-order clauses into CNF and the satisfiability oracle
//! used by inference, entailment and model counting.

mod solver;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::logic::{ground_clause, Atom, Clause, Constant, Literal, Symbols};

pub use solver::{count_models, Lit, SolveResult, Solver, Stats};

/// Clauses over integer variables, each variable standing for a ground atom.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundCNF {
    atoms: Vec<Atom>,
    table: HashMap<Atom, usize>,
    clauses: Vec<Vec<Lit>>,
}

impl GroundCNF {
    pub fn new() -> Self {
        Self::default()
    }

    /// A CNF whose variables include `atoms` (in order) even if no clause
    /// mentions them.
    pub fn with_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut cnf = Self::new();
        for a in atoms {
            cnf.var(a);
        }
        cnf
    }

    /// The variable of a ground atom, allocated on first use.
    pub fn var(&mut self, a: &Atom) -> usize {
        if let Some(&v) = self.table.get(a) {
            return v;
        }
        let v = self.atoms.len();
        self.atoms.push(a.clone());
        self.table.insert(a.clone(), v);
        v
    }

    pub fn lookup(&self, a: &Atom) -> Option<usize> {
        self.table.get(a).copied()
    }

    pub fn atom(&self, var: usize) -> &Atom {
        &self.atoms[var]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn n_vars(&self) -> usize {
        self.atoms.len()
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn literal(&mut self, l: &Literal) -> Lit {
        Lit::new(self.var(&l.atom), l.positive)
    }

    /// Adds a ground clause.
    pub fn add_ground(&mut self, c: &Clause) {
        debug_assert!(c.is_ground());
        let lits = c.literals().iter().map(|l| self.literal(l)).collect();
        self.clauses.push(lits);
    }

    /// Adds every grounding of `c` over `constants`.
    pub fn add_grounded(&mut self, c: &Clause, constants: &[Constant]) {
        for g in ground_clause(c, constants) {
            self.add_ground(&g);
        }
    }

    pub fn add_unit(&mut self, l: &Literal) {
        let lit = self.literal(l);
        self.clauses.push(vec![lit]);
    }

    pub fn add_lits(&mut self, lits: Vec<Lit>) {
        self.clauses.push(lits);
    }

    /// A fresh solver loaded with these clauses.
    pub fn solver(&self) -> Solver {
        let mut s = Solver::with_vars(self.n_vars());
        for c in &self.clauses {
            s.add_clause(c);
        }
        s
    }

    /// Does the set of true atoms `world` satisfy every clause?
    pub fn satisfied_by(&self, world: &BTreeSet<Atom>) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| world.contains(&self.atoms[l.var()]) == l.positive()))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n_vars(), self.clauses.len());
        for c in &self.clauses {
            for l in c {
                write!(out, "{} ", l.to_dimacs()).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }

    /// One `<variable> <atom>` line per variable.
    pub fn atom_table(&self, symbols: &Symbols) -> String {
        let mut out = String::new();
        for (i, a) in self.atoms.iter().enumerate() {
            writeln!(out, "{} {}", i + 1, a.display(symbols)).unwrap();
        }
        out
    }
}

/// Grounds `formulas` over `constants` and adds a unit clause per evidence
/// literal.
pub fn ground_to_cnf(formulas: &[Clause], constants: &[Constant], evidence: &[Literal]) -> GroundCNF {
    let mut cnf = GroundCNF::new();
    for f in formulas {
        cnf.add_grounded(f, constants);
    }
    for l in evidence {
        cnf.add_unit(l);
    }
    cnf
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatVerdict {
    pub satisfiable: bool,
    /// The true atoms of a model, present iff satisfiable.
    pub witness: Option<BTreeSet<Atom>>,
}

pub fn solve(cnf: &GroundCNF) -> SatVerdict {
    let mut s = cnf.solver();
    match s.solve() {
        SolveResult::Sat => {
            let witness: BTreeSet<Atom> =
                (0..cnf.n_vars()).filter(|&v| s.model_value(v)).map(|v| cnf.atoms[v].clone()).collect();
            assert!(cnf.satisfied_by(&witness), "solver returned a non-model");
            SatVerdict { satisfiable: true, witness: Some(witness) }
        }
        _ => SatVerdict { satisfiable: false, witness: None },
    }
}

/// Do `formulas` grounded over `constants` entail every grounding of
/// `query`?
pub fn entails(formulas: &[Clause], constants: &[Constant], query: &Clause) -> bool {
    let mut cnf = ground_to_cnf(formulas, constants, &[]);
    let groundings = ground_clause(query, constants);
    let negations: Vec<Vec<Lit>> =
        groundings.iter().map(|g| g.literals().iter().map(|l| !cnf.literal(l)).collect()).collect();
    let mut s = cnf.solver();
    negations.iter().all(|assumptions| s.solve_with(assumptions) == SolveResult::Unsat)
}
