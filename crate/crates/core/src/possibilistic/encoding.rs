use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;

use super::{StratifiedTheory, TheoryError};
use crate::data::{language_atoms, marginal_distribution, GlobalExample, LocalExample};
use crate::logic::{Atom, Clause, Constant, Literal, Predicate, Term, Variable};

/// Class enumeration walks all 2^atoms worlds.
pub const MAX_ENCODING_ATOMS: usize = 16;

/// One isomorphism class of width-k worlds.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalClass {
    pub representative: LocalExample,
    /// c(α), the number of distinct worlds in the class.
    pub cardinality: usize,
    /// P_{Υ,k} summed over the class.
    pub probability: f64,
}

impl MarginalClass {
    /// ¬α for the complete conjunction α of the representative, constants
    /// lifted to distinct variables.
    pub fn negated_formula(&self, language: &[Atom]) -> Clause {
        let lift = |a: &Atom| Atom {
            predicate: a.predicate.clone(),
            args: a.args.iter().map(|t| Term::Var(Variable(t.as_const().expect("ground").0))).collect(),
        };
        Clause::new(
            language.iter().map(|a| {
                if self.representative.atoms.contains(a) {
                    Literal::neg(lift(a))
                } else {
                    Literal::pos(lift(a))
                }
            }),
            true,
        )
    }
}

fn world_mask(atoms: &BTreeSet<Atom>, index: &HashMap<&Atom, usize>) -> u32 {
    atoms.iter().fold(0, |m, a| m | 1 << index[a])
}

/// Every isomorphism class over the width-k language of `signature`, with
/// the probability mass `dist` gives it. Classes are ordered by the smallest
/// member mask.
pub fn marginal_classes(
    signature: &BTreeSet<Predicate>,
    k: usize,
    dist: &BTreeMap<LocalExample, f64>,
) -> Result<Vec<MarginalClass>, TheoryError> {
    let language = language_atoms(signature, k);
    let n = language.len();
    if n > MAX_ENCODING_ATOMS {
        return Err(TheoryError::Size(format!("{n} ground atoms, more than {MAX_ENCODING_ATOMS}")));
    }
    let index: HashMap<&Atom, usize> = language.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let perms: Vec<Vec<usize>> = (0..k)
        .permutations(k)
        .map(|p| language.iter().map(|a| index[&a.map_constants(|c| Constant(p[c.index()] as u32))]).collect())
        .collect();
    let mut mass: HashMap<u32, f64> = HashMap::new();
    for (w, p) in dist {
        *mass.entry(world_mask(&w.atoms, &index)).or_insert(0.0) += p;
    }
    let mut seen = vec![false; 1 << n];
    let mut out = Vec::new();
    for mask in 0..1u32 << n {
        if seen[mask as usize] {
            continue;
        }
        let members: BTreeSet<u32> =
            perms.iter().map(|p| (0..n).filter(|&i| mask >> i & 1 == 1).fold(0u32, |m, i| m | 1 << p[i])).collect();
        for &m in &members {
            seen[m as usize] = true;
        }
        let atoms = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| language[i].clone());
        out.push(MarginalClass {
            representative: LocalExample { width: k, atoms: atoms.collect() },
            cardinality: members.len(),
            probability: members.iter().filter_map(|m| mass.get(m)).sum(),
        });
    }
    Ok(out)
}

/// Θ_{Υ,k} = {(¬α, 1 − P(α)/c(α))}; weight-0 formulas are dropped.
pub fn exact_encoding(ex: &GlobalExample, k: usize) -> Result<StratifiedTheory, TheoryError> {
    let n = language_atoms(ex.signature(), k).len();
    if n > MAX_ENCODING_ATOMS {
        return Err(TheoryError::Size(format!("{n} ground atoms, more than {MAX_ENCODING_ATOMS}")));
    }
    let dist = marginal_distribution(ex, k).map_err(|e| TheoryError::Size(e.to_string()))?;
    let language = language_atoms(ex.signature(), k);
    let classes = marginal_classes(ex.signature(), k, &dist)?;
    let mut formulas = Vec::new();
    for c in &classes {
        let w = (1.0 - c.probability / c.cardinality as f64).clamp(0.0, 1.0);
        let w = if (1.0 - w).abs() < 1e-12 { 1.0 } else { w };
        if w > 1e-12 {
            formulas.push((c.negated_formula(&language), w));
        }
    }
    StratifiedTheory::new(formulas)
}
