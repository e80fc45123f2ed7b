use std::collections::{BTreeMap, BTreeSet};

use super::{StratifiedTheory, TheoryError};
use crate::logic::{ground_clause, Atom, Clause, Constant, Literal};
use crate::sat::{GroundCNF, Lit, SolveResult, Solver};

/// The consistent cut found for a piece of evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutoff {
    /// μ₀, or `None` when even the top stratum conflicts with the evidence.
    pub level: Option<f64>,
    pub cut: Vec<Clause>,
    pub sat_calls: usize,
}

/// A theory grounded once, with one selector variable per stratum, plus the
/// evidence; answers consistency and entailment questions by assumptions.
pub struct MapState {
    cnf: GroundCNF,
    solver: Solver,
    levels: Vec<f64>,
    selectors: Vec<Lit>,
    /// Index into `levels` of μ₀; `levels.len()` for the empty cut.
    cut_index: usize,
    pub cutoff: Cutoff,
}

fn check_evidence(evidence: &[Literal]) -> Result<(), TheoryError> {
    let mut seen: BTreeMap<&Atom, bool> = BTreeMap::new();
    for l in evidence {
        if let Some(&p) = seen.get(&l.atom) {
            if p != l.positive {
                return Err(TheoryError::ContradictoryEvidence(l.atom.to_string()));
            }
        }
        seen.insert(&l.atom, l.positive);
    }
    Ok(())
}

impl MapState {
    /// Grounds the theory over `constants` and binary-searches the smallest
    /// level whose cut is consistent with the evidence.
    pub fn new(theory: &StratifiedTheory, evidence: &[Literal], constants: &[Constant]) -> Result<Self, TheoryError> {
        check_evidence(evidence)?;
        let levels = theory.levels();
        let mut cnf = GroundCNF::new();
        let mut guarded: Vec<Vec<Lit>> = Vec::new();
        let mut pending: Vec<(usize, Vec<Vec<Lit>>)> = Vec::new();
        for f in theory.formulas() {
            let li = levels.iter().position(|&l| l == f.weight).unwrap();
            let clauses = ground_clause(&f.clause, constants)
                .iter()
                .map(|g| g.literals().iter().map(|l| cnf.literal(l)).collect())
                .collect();
            pending.push((li, clauses));
        }
        for l in evidence {
            cnf.add_unit(l);
        }
        let base = cnf.n_vars();
        let selectors: Vec<Lit> = (0..levels.len()).map(|i| Lit::new(base + i, true)).collect();
        for (li, clauses) in pending {
            for mut c in clauses {
                c.push(!selectors[li]);
                guarded.push(c);
            }
        }
        let mut solver = Solver::with_vars(base + levels.len());
        for c in cnf.clauses() {
            solver.add_clause(c);
        }
        for c in &guarded {
            solver.add_clause(c);
        }
        let n = levels.len();
        let mut state = MapState {
            cnf,
            solver,
            levels,
            selectors,
            cut_index: n,
            cutoff: Cutoff { level: None, cut: Vec::new(), sat_calls: 0 },
        };
        // consistent(i) is monotone in i and consistent(n) holds
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if state.consistent(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        state.cut_index = lo;
        let level = state.levels.get(lo).copied();
        state.cutoff.level = level;
        state.cutoff.cut = level.map(|l| theory.cut(l)).unwrap_or_default();
        Ok(state)
    }

    fn assumptions(&self, index: usize) -> Vec<Lit> {
        self.selectors[index..].to_vec()
    }

    fn consistent(&mut self, index: usize) -> bool {
        self.cutoff.sat_calls += 1;
        let a = self.assumptions(index);
        self.solver.solve_with(&a) == SolveResult::Sat
    }

    fn cut_model(&mut self) -> Vec<bool> {
        let a = self.assumptions(self.cut_index);
        if self.solver.solve_with(&a) != SolveResult::Sat {
            unreachable!("the chosen cut is consistent with the evidence");
        }
        self.solver.model().to_vec()
    }

    /// Θ_{μ₀} ∪ E ⊨ atom.
    pub fn entails(&mut self, atom: &Atom) -> bool {
        let Some(v) = self.cnf.lookup(atom) else {
            return false;
        };
        let mut a = self.assumptions(self.cut_index);
        a.push(Lit::new(v, false));
        self.solver.solve_with(&a) == SolveResult::Unsat
    }

    /// The entailed atoms among `atoms`. Atoms false in one model of the cut
    /// are skipped without a call.
    pub fn prediction<'a>(&mut self, atoms: impl IntoIterator<Item = &'a Atom>) -> BTreeSet<Atom> {
        let model = self.cut_model();
        let mut out = BTreeSet::new();
        for atom in atoms {
            let Some(v) = self.cnf.lookup(atom) else {
                continue;
            };
            if model[v] && self.entails(atom) {
                out.insert(atom.clone());
            }
        }
        out
    }

    pub fn atoms(&self) -> &[Atom] {
        self.cnf.atoms()
    }
}

pub fn map_cutoff(
    theory: &StratifiedTheory,
    evidence: &[Literal],
    constants: &[Constant],
) -> Result<Cutoff, TheoryError> {
    Ok(MapState::new(theory, evidence, constants)?.cutoff)
}

pub fn map_entails(
    theory: &StratifiedTheory,
    evidence: &[Literal],
    constants: &[Constant],
    query: &Atom,
) -> Result<bool, TheoryError> {
    Ok(MapState::new(theory, evidence, constants)?.entails(query))
}

/// Entailed atoms of the theory's ground language plus the positive
/// evidence; everything else is predicted false.
pub fn map_prediction(
    theory: &StratifiedTheory,
    evidence: &[Literal],
    constants: &[Constant],
) -> Result<BTreeSet<Atom>, TheoryError> {
    let mut state = MapState::new(theory, evidence, constants)?;
    let atoms: Vec<Atom> = state.atoms().to_vec();
    let mut out = state.prediction(&atoms);
    out.extend(evidence.iter().filter(|l| l.positive).map(|l| l.atom.clone()));
    Ok(out)
}
