//! Matching-subset counting (exact, sampled, hashing-based) and model
//! counting over width-k languages, plus the tiered strategy that picks
//! among them.

mod approx;
mod models;
mod subsets;

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::data::{binomial, GlobalExample};
use crate::logic::{Literal, Substitution, Term, Variable};
use crate::query::{ConjunctiveQuery, Constraint, QueryError};

pub use approx::{approx_mc, pivot, rounds, ApproxOutcome, CellOracle, SubsetCells};
pub use models::{
    model_count, model_count_exact, model_count_xor, GroundCells, LazyCells, ModelCountMode, EXACT_MODEL_ATOMS,
};
pub use subsets::{count_sampled, matching_subsets_alg1, matching_subsets_naive, Alg1Stats, Subset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("query has {vars} variables, more than the width {k}")]
    TooManyVariables { vars: usize, k: usize },
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("{0}")]
    Budget(String),
}

impl CountError {
    /// A search or sampling budget ran out, as opposed to a malformed task.
    pub fn is_budget(&self) -> bool {
        matches!(self, CountError::Budget(_) | CountError::Query(QueryError::BudgetExhausted { .. }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CountMethod {
    ExactNaive,
    ExactAlg1,
    ExactDpll,
    Sampled,
    XorApprox,
}

impl CountMethod {
    pub fn name(self) -> &'static str {
        match self {
            CountMethod::ExactNaive => "exact-naive",
            CountMethod::ExactAlg1 => "exact-alg1",
            CountMethod::ExactDpll => "exact-dpll",
            CountMethod::Sampled => "sampled",
            CountMethod::XorApprox => "xor-approx",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, CountMethod::ExactNaive | CountMethod::ExactAlg1 | CountMethod::ExactDpll)
    }
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountReport {
    pub value: f64,
    pub method: CountMethod,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// 95% Wilson interval, for sampled counts.
    pub ci: Option<(f64, f64)>,
}

impl CountReport {
    pub fn exact(value: u128, method: CountMethod) -> Self {
        CountReport { value: value as f64, method, epsilon: None, delta: None, ci: None }
    }

    /// `method value [ci_lo ci_hi] seed`
    pub fn record(&self, seed: u64) -> String {
        match self.ci {
            Some((lo, hi)) => format!("{} {} {} {} {}", self.method, self.value, lo, hi, seed),
            None => format!("{} {} {}", self.method, self.value, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountingPolicy {
    /// Search-node budget of the first exact attempt.
    pub exact_limit_small: u64,
    /// Search-node budget of the second exact attempt.
    pub exact_limit_large: u64,
    pub ci_rel_width_threshold: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub sample_budget: usize,
    /// Search-node budget of one bounded cell count inside hashing.
    pub cell_limit: u64,
}

impl Default for CountingPolicy {
    fn default() -> Self {
        CountingPolicy {
            exact_limit_small: 20_000,
            exact_limit_large: 2_000_000,
            ci_rel_width_threshold: 0.2,
            epsilon: 0.8,
            delta: 0.2,
            sample_budget: 1000,
            cell_limit: 20_000_000,
        }
    }
}

/// `∃V'…: α ∧ card(k, vars(α) ∪ V')` with k − m fresh variables.
pub fn k_extension(q: &ConjunctiveQuery, k: usize) -> Result<ConjunctiveQuery, CountError> {
    let m = q.variables.len();
    if m > k {
        return Err(CountError::TooManyVariables { vars: m, k });
    }
    let mut out = q.clone();
    for _ in m..k {
        let v = out.fresh_variable();
        out.add_variable(v);
    }
    let vars = out.variables.clone();
    out.add_constraint(Constraint::Card { k, vars });
    Ok(out)
}

/// Orders the variables that occur in no literal and only in constraints
/// forcing them pairwise distinct. Such variables are interchangeable, so the
/// set of used constants is unchanged while each set is found once.
pub fn break_fresh_symmetry(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    let in_literals: BTreeSet<Variable> = q.literals.iter().flat_map(|l| l.atom.variables()).collect();
    let mut fresh: Vec<Variable> = q.variables.iter().copied().filter(|v| !in_literals.contains(v)).collect();
    let distinct = |vs: &[Variable]| fresh.iter().all(|v| vs.contains(v));
    let forced = q.constraints.iter().any(|c| match c {
        Constraint::AllDiff(vs) => distinct(vs),
        Constraint::Card { k, vars } => *k == vars.len() && distinct(vars),
        _ => false,
    });
    let other = q.constraints.iter().any(|c| match c {
        Constraint::AllDiff(_) | Constraint::Card { .. } => false,
        Constraint::In { var, .. } => fresh.contains(var),
        Constraint::Ordered(vs) => vs.iter().any(|v| fresh.contains(v)),
    });
    let partial = q.constraints.iter().any(|c| match c {
        Constraint::AllDiff(vs) | Constraint::Card { vars: vs, .. } => {
            let n = fresh.iter().filter(|v| vs.contains(v)).count();
            n != 0 && n != fresh.len()
        }
        _ => false,
    });
    let mut out = q.clone();
    if forced && !other && !partial && fresh.len() > 1 {
        fresh.sort();
        out.add_constraint(Constraint::Ordered(fresh));
    }
    out
}

/// Set partitions of `0..n` as block labels (restricted growth strings).
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=max + usize::from(!prefix.is_empty()) {
            prefix.push(b);
            rec(prefix, max.max(b), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), 0, n, &mut out);
    out
}

fn identify(q: &ConjunctiveQuery, labels: &[usize]) -> Option<ConjunctiveQuery> {
    let rep: Vec<Variable> =
        labels.iter().map(|&b| q.variables[labels.iter().position(|&x| x == b).unwrap()]).collect();
    let map = |v: Variable| rep[q.variables.iter().position(|&w| w == v).unwrap()];
    let theta = Substitution::from_pairs(q.variables.iter().map(|&v| (v, Term::Var(map(v)))));
    let literals: Vec<Literal> = q.literals.iter().map(|l| l.substitute(&theta)).collect();
    let mut out = ConjunctiveQuery::new(literals);
    for c in &q.constraints {
        let c = match c {
            Constraint::AllDiff(vs) => {
                let mapped: Vec<Variable> = vs.iter().map(|&v| map(v)).collect();
                let mut sorted = mapped.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() < mapped.len() {
                    return None;
                }
                Constraint::AllDiff(mapped)
            }
            Constraint::Card { k, vars } => Constraint::Card { k: *k, vars: vars.iter().map(|&v| map(v)).collect() },
            Constraint::In { var, set } => Constraint::In { var: map(*var), set: set.clone() },
            Constraint::Ordered(vs) => Constraint::Ordered(vs.iter().map(|&v| map(v)).collect()),
        };
        out.add_constraint(c);
    }
    for v in &q.variables {
        out.add_variable(map(*v));
    }
    Some(out)
}

fn pairwise_distinct(q: &ConjunctiveQuery) -> bool {
    q.variables.len() <= 1
        || q.constraints.iter().any(|c| match c {
            Constraint::AllDiff(vs) => q.variables.iter().all(|v| vs.contains(v)),
            _ => false,
        })
}

/// A union of k-extended queries: a k-subset matches when it matches some
/// disjunct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetTask {
    pub k: usize,
    pub disjuncts: Vec<ConjunctiveQuery>,
}

impl SubsetTask {
    /// Subsets 𝒮 with Υ⟨𝒮⟩ ⊨ ∃vars: q. Queries whose variables may coincide
    /// become one disjunct per identification of variables.
    pub fn new(q: &ConjunctiveQuery, k: usize) -> Self {
        let mut disjuncts = Vec::new();
        if pairwise_distinct(q) {
            disjuncts.extend(k_extension(q, k).ok());
        } else {
            for labels in set_partitions(q.variables.len()) {
                if let Some(merged) = identify(q, &labels) {
                    disjuncts.extend(k_extension(&merged, k).ok());
                }
            }
        }
        SubsetTask { k, disjuncts }
    }

    pub fn union(k: usize, queries: &[ConjunctiveQuery]) -> Self {
        SubsetTask { k, disjuncts: queries.iter().flat_map(|q| SubsetTask::new(q, k).disjuncts).collect() }
    }
}

/// Four tiers: exact with a small budget, sampling, exact with a large
/// budget, hashing.
pub fn count_dispatch<R: Rng + ?Sized>(
    ex: &GlobalExample,
    task: &SubsetTask,
    policy: &CountingPolicy,
    rng: &mut R,
) -> Result<CountReport, CountError> {
    if let Ok((sets, _)) = matching_subsets_alg1(ex, task, &[], Some(policy.exact_limit_small)) {
        return Ok(CountReport::exact(sets.len() as u128, CountMethod::ExactAlg1));
    }
    if binomial(ex.n_constants(), task.k) < u128::from(u64::MAX) {
        let (report, usable) = count_sampled(ex, task, policy, rng)?;
        if usable {
            return Ok(report);
        }
    }
    if let Ok((sets, _)) = matching_subsets_alg1(ex, task, &[], Some(policy.exact_limit_large)) {
        return Ok(CountReport::exact(sets.len() as u128, CountMethod::ExactAlg1));
    }
    count_xor_approx(ex, task, policy, rng)
}

/// (ε, δ)-approximate matching-subset count.
pub fn count_xor_approx<R: Rng + ?Sized>(
    ex: &GlobalExample,
    task: &SubsetTask,
    policy: &CountingPolicy,
    rng: &mut R,
) -> Result<CountReport, CountError> {
    let mut cells = SubsetCells::new(ex, task, Some(policy.cell_limit));
    let out = approx_mc(&mut cells, policy.epsilon, policy.delta, 2 * policy.exact_limit_small, rng)?;
    Ok(CountReport {
        value: out.estimate,
        method: CountMethod::XorApprox,
        epsilon: Some(policy.epsilon),
        delta: Some(policy.delta),
        ci: None,
    })
}

#[cfg(test)]
pub(crate) mod tests;
