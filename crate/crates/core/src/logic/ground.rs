use std::collections::BTreeSet;

use super::{Clause, Constant, HornRule, Substitution, Term, Variable};

/// Every map from `vars` into `constants` (injective when `injective`),
/// in lexicographic order of the constant positions.
pub fn substitutions(vars: &[Variable], constants: &[Constant], injective: bool) -> impl Iterator<Item = Substitution> {
    Assignments::new(vars.len(), constants.len(), injective).map({
        let vars = vars.to_vec();
        let constants = constants.to_vec();
        move |idx| Substitution::from_pairs(vars.iter().zip(idx).map(|(&v, i)| (v, Term::Const(constants[i]))))
    })
}

/// Odometer over index tuples `[0, n)^len`, optionally skipping tuples with
/// repeated entries.
pub(crate) struct Assignments {
    cur: Vec<usize>,
    n: usize,
    injective: bool,
    done: bool,
}

impl Assignments {
    pub(crate) fn new(len: usize, n: usize, injective: bool) -> Self {
        let done = (len > 0 && n == 0) || (injective && len > n);
        let mut a = Assignments { cur: vec![0; len], n, injective, done };
        if !a.done && injective && !a.valid() {
            a.advance();
        }
        a
    }

    fn valid(&self) -> bool {
        if !self.injective {
            return true;
        }
        for i in 0..self.cur.len() {
            for j in 0..i {
                if self.cur[i] == self.cur[j] {
                    return false;
                }
            }
        }
        true
    }

    fn step(&mut self) {
        for pos in (0..self.cur.len()).rev() {
            self.cur[pos] += 1;
            if self.cur[pos] < self.n {
                return;
            }
            self.cur[pos] = 0;
        }
        self.done = true;
    }

    fn advance(&mut self) {
        loop {
            self.step();
            if self.done || self.valid() {
                return;
            }
        }
    }
}

impl Iterator for Assignments {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        if self.cur.is_empty() {
            self.done = true;
        } else {
            self.advance();
        }
        Some(out)
    }
}

/// All ground instances of `clause` over `constants`. A variable-free clause
/// yields itself; with AllDiff only injective substitutions are used.
pub fn ground_clause(clause: &Clause, constants: &[Constant]) -> Vec<Clause> {
    let vars = clause.variables();
    substitutions(&vars, constants, clause.all_diff()).map(|theta| clause.substitute(&theta)).collect()
}

/// A clause or a Horn rule, the two formula shapes that get grounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroundFormula {
    Clause(Clause),
    Rule(HornRule),
}

/// Set of ground instances of a formula over a constant set.
pub fn ground(formula: &GroundFormula, constants: &BTreeSet<Constant>) -> BTreeSet<GroundFormula> {
    let constants: Vec<Constant> = constants.iter().copied().collect();
    match formula {
        GroundFormula::Clause(c) => ground_clause(c, &constants).into_iter().map(GroundFormula::Clause).collect(),
        GroundFormula::Rule(r) => {
            let vars = r.variables();
            substitutions(&vars, &constants, r.all_diff)
                .map(|theta| {
                    GroundFormula::Rule(HornRule {
                        head: r.head.substitute(&theta),
                        body: r.body.iter().map(|a| a.substitute(&theta)).collect(),
                        all_diff: r.all_diff,
                    })
                })
                .collect()
        }
    }
}

impl PartialOrd for GroundFormula {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroundFormula {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (GroundFormula::Clause(a), GroundFormula::Clause(b)) => a.cmp(b),
            (GroundFormula::Rule(a), GroundFormula::Rule(b)) => a.cmp(b),
            (GroundFormula::Clause(_), GroundFormula::Rule(_)) => std::cmp::Ordering::Less,
            (GroundFormula::Rule(_), GroundFormula::Clause(_)) => std::cmp::Ordering::Greater,
        }
    }
}
