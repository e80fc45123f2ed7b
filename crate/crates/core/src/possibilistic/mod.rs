//! Stratified possibilistic theories: the possibility distribution they
//! induce, the exact encoding of a relational marginal, and MAP inference
//! from the lowest cut consistent with the evidence.

mod encoding;
mod inference;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::data::LocalExample;
use crate::logic::{ground_clause, parse_clause, Atom, Clause, Constant, ParseError, Symbols};

pub use encoding::{exact_encoding, marginal_classes, MarginalClass, MAX_ENCODING_ATOMS};
pub use inference::{map_cutoff, map_entails, map_prediction, Cutoff, MapState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("weight {0} outside [0, 1]")]
    Weight(f64),
    #[error("the bottom formula must sit at the lowest level")]
    BottomNotLowest,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evidence contains both {0} and its negation")]
    ContradictoryEvidence(String),
    #[error("{0}")]
    Size(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFormula {
    pub clause: Clause,
    pub weight: f64,
}

/// Weighted clauses kept in descending weight order (ties by clause).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct StratifiedTheory {
    formulas: Vec<WeightedFormula>,
}

impl StratifiedTheory {
    pub fn new(formulas: impl IntoIterator<Item = (Clause, f64)>) -> Result<Self, TheoryError> {
        let mut formulas: Vec<WeightedFormula> =
            formulas.into_iter().map(|(clause, weight)| WeightedFormula { clause, weight }).collect();
        for f in formulas.iter_mut().filter(|f| f.clause.is_bottom()) {
            f.clause = Clause::bottom();
        }
        for f in &formulas {
            if !(0.0..=1.0).contains(&f.weight) {
                return Err(TheoryError::Weight(f.weight));
            }
        }
        formulas.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.clause.cmp(&b.clause)));
        formulas.dedup();
        let min = formulas.last().map(|f| f.weight);
        if formulas.iter().any(|f| f.clause.is_bottom() && Some(f.weight) != min) {
            return Err(TheoryError::BottomNotLowest);
        }
        Ok(StratifiedTheory { formulas })
    }

    pub fn formulas(&self) -> &[WeightedFormula] {
        &self.formulas
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    /// Distinct weights, ascending.
    pub fn levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = self.formulas.iter().map(|f| f.weight).collect();
        levels.reverse();
        levels.dedup();
        levels
    }

    /// (level, clauses) pairs, ascending.
    pub fn strata(&self) -> Vec<(f64, Vec<&Clause>)> {
        self.levels()
            .into_iter()
            .map(|l| (l, self.formulas.iter().filter(|f| f.weight == l).map(|f| &f.clause).collect()))
            .collect()
    }

    /// Θ_μ: the clauses with weight at least `mu`.
    pub fn cut(&self, mu: f64) -> Vec<Clause> {
        self.formulas.iter().filter(|f| f.weight >= mu).map(|f| f.clause.clone()).collect()
    }

    /// The clauses at weight 1.
    pub fn hard(&self) -> Vec<Clause> {
        self.cut(1.0)
    }

    pub fn bottom_weight(&self) -> Option<f64> {
        self.formulas.iter().find(|f| f.clause.is_bottom()).map(|f| f.weight)
    }

    /// One `<weight> :: <clause>` line per formula, heaviest first.
    pub fn to_text(&self, symbols: &Symbols) -> String {
        let mut out = String::new();
        for f in &self.formulas {
            writeln!(out, "{:?} :: {}", f.weight, f.clause.display(symbols)).unwrap();
        }
        out
    }
}

/// Parses a theory file. Blank lines and `#` comments are skipped.
pub fn parse_theory(text: &str, symbols: &mut Symbols) -> Result<StratifiedTheory, TheoryError> {
    let mut formulas = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (w, c) =
            line.split_once("::").ok_or_else(|| ParseError::new("expected `<weight> :: <clause>`").at_line(i + 1))?;
        let weight: f64 =
            w.trim().parse().map_err(|_| ParseError::new(format!("bad weight `{}`", w.trim())).at_line(i + 1))?;
        formulas.push((parse_clause(c, symbols).map_err(|e| e.at_line(i + 1))?, weight));
    }
    StratifiedTheory::new(formulas)
}

/// Does the world (its set of true atoms) satisfy every grounding of `c`?
pub fn satisfies(world: &BTreeSet<Atom>, c: &Clause, constants: &[Constant]) -> bool {
    ground_clause(c, constants).iter().all(|g| g.literals().iter().any(|l| world.contains(&l.atom) == l.positive))
}

/// π(ω) of a local example, grounding over its constants `0..width`.
pub fn possibility(theory: &StratifiedTheory, omega: &LocalExample) -> f64 {
    let constants: Vec<Constant> = (0..omega.width as u32).map(Constant).collect();
    world_possibility(theory, &omega.atoms, &constants)
}

/// π(ω) = min{1 − λ : ω violates α}, 1 if nothing is violated.
pub fn world_possibility(theory: &StratifiedTheory, world: &BTreeSet<Atom>, constants: &[Constant]) -> f64 {
    theory
        .formulas
        .iter()
        .filter(|f| !satisfies(world, &f.clause, constants))
        .map(|f| 1.0 - f.weight)
        .fold(1.0, f64::min)
}

#[cfg(test)]
mod tests;
