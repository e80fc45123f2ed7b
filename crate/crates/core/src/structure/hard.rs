use super::{IsoSet, StructureError};
use crate::data::GlobalExample;
use crate::logic::{theta_subsumes, Atom, Clause, Literal, Predicate, Term, Variable};
use crate::query::{satisfiable, ConjunctiveQuery};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardRuleConfig {
    /// Literal limit for clauses with a binary or wider literal.
    pub t: usize,
    /// Literal limit for clauses over unary predicates only.
    pub t_prime: usize,
    /// Variable limit.
    pub k: usize,
}

impl Default for HardRuleConfig {
    fn default() -> Self {
        HardRuleConfig { t: 3, t_prime: 4, k: 3 }
    }
}

impl HardRuleConfig {
    pub fn validate(&self) -> Result<(), StructureError> {
        if self.t == 0 || self.k == 0 || self.t_prime <= self.t {
            return Err(StructureError::Config(format!(
                "need t >= 1, t' > t, k >= 1 (got t={}, t'={}, k={})",
                self.t, self.t_prime, self.k
            )));
        }
        Ok(())
    }
}

/// Argument tuples of length `arity` over `n` existing variables, new
/// variables introduced in order, at most `k` in total.
pub(crate) fn arg_tuples(arity: usize, n: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(arity: usize, next: usize, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == arity {
            out.push(cur.clone());
            return;
        }
        for v in 0..next.max(k.min(next + 1)) {
            cur.push(v as u32);
            rec(arity, next.max(v + 1), k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(arity, n, k, &mut Vec::new(), &mut out);
    out
}

fn is_unary(p: &Predicate) -> bool {
    p.arity() <= 1
}

fn all_unary(c: &Clause) -> bool {
    c.literals().iter().all(|l| is_unary(&l.atom.predicate))
}

fn extensions(c: &Clause, signature: &[Predicate], k: usize, unary_only: bool) -> Vec<Clause> {
    let n = c.variables().len();
    let mut out = Vec::new();
    for p in signature.iter().filter(|p| !unary_only || is_unary(p)) {
        for args in arg_tuples(p.arity(), n, k) {
            let atom = Atom::new(p.clone(), args.into_iter().map(|v| Term::Var(Variable(v))).collect());
            for positive in [false, true] {
                let lit = Literal { atom: atom.clone(), positive };
                if c.literals().contains(&lit) {
                    continue;
                }
                let ext = Clause::new(c.literals().iter().cloned().chain([lit]), true);
                if !ext.is_tautology() {
                    out.push(ext.normalized());
                }
            }
        }
    }
    out
}

/// Constant-free AllDiff clauses within the size limits, one per
/// isomorphism class, by literal count then generation order. Extensions of
/// clauses for which `stop` holds are not generated.
pub(crate) fn enumerate_clauses(
    signature: &[Predicate],
    cfg: &HardRuleConfig,
    mut stop: impl FnMut(&Clause) -> bool,
) -> Vec<Clause> {
    let mut seen = IsoSet::default();
    let mut out = Vec::new();
    let mut frontier = vec![Clause::bottom()];
    for size in 1..=cfg.t_prime {
        let unary_only = size > cfg.t;
        let mut next = Vec::new();
        for c in &frontier {
            if unary_only && !all_unary(c) {
                continue;
            }
            for ext in extensions(c, signature, cfg.k, unary_only) {
                if ext.len() == size && seen.insert(&ext) {
                    out.push(ext.clone());
                    if !stop(&ext) {
                        next.push(ext);
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

/// Every candidate clause the hard-rule search can consider.
pub fn hard_rule_candidates(ex: &GlobalExample, cfg: &HardRuleConfig) -> Vec<Clause> {
    let sig: Vec<Predicate> = ex.signature().iter().cloned().collect();
    enumerate_clauses(&sig, cfg, |_| false)
}

/// Δ: the subsumption-minimal constant-free clauses without a
/// counterexample in the data.
pub fn learn_hard_rules(ex: &GlobalExample, cfg: &HardRuleConfig) -> Result<Vec<Clause>, StructureError> {
    cfg.validate()?;
    let sig: Vec<Predicate> = ex.signature().iter().cloned().collect();
    let mut retained: Vec<Clause> = Vec::new();
    enumerate_clauses(&sig, cfg, |c| {
        if retained.iter().any(|r| theta_subsumes(r, c)) {
            return true;
        }
        if satisfiable(&ConjunctiveQuery::negation_of(c), ex.index()) {
            return false;
        }
        retained.push(c.clone());
        true
    });
    Ok(retained)
}
