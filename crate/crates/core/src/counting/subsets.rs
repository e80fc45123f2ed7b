use std::collections::BTreeSet;
use std::ops::ControlFlow;

use rand::seq::index;
use rand::Rng;

use super::{CountError, CountMethod, CountReport, CountingPolicy, SubsetTask};
use crate::data::{binomial, GlobalExample};
use crate::logic::Constant;
use crate::query::{csp_query_with, find_solution, for_each_solution, Budget, Constraint, XorConstraint};

pub type Subset = BTreeSet<Constant>;

fn budget(limit: Option<u64>) -> Budget {
    limit.map_or_else(Budget::unlimited, Budget::limited)
}

/// Every solution of every disjunct, collapsed to its set of constants.
pub fn matching_subsets_naive(
    ex: &GlobalExample,
    task: &SubsetTask,
    limit: Option<u64>,
) -> Result<BTreeSet<Subset>, CountError> {
    let mut budget = budget(limit);
    let mut out = BTreeSet::new();
    for q in &task.disjuncts {
        for_each_solution(q, ex.index(), &[], &mut budget, |s| {
            out.insert(s.used_constants());
            ControlFlow::Continue(())
        })?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alg1Stats {
    pub csp_calls: u64,
    /// (partial set, constant) pairs returned by the CSP queries.
    pub solutions: u64,
    /// Distinct partial sets built along the way.
    pub partials: BTreeSet<Subset>,
}

/// Grows partial constant sets one variable at a time, asking for the
/// values of Vᵢ that extend to a full solution with V₁..Vᵢ₋₁ inside the
/// partial set. Partial sets larger than k are dropped.
pub fn matching_subsets_alg1(
    ex: &GlobalExample,
    task: &SubsetTask,
    xors: &[XorConstraint],
    limit: Option<u64>,
) -> Result<(BTreeSet<Subset>, Alg1Stats), CountError> {
    let mut budget = budget(limit);
    let mut stats = Alg1Stats::default();
    let mut out = BTreeSet::new();
    for q in &task.disjuncts {
        let mut current: BTreeSet<Subset> = BTreeSet::from([Subset::new()]);
        for (i, &v) in q.variables.iter().enumerate() {
            let mut next = BTreeSet::new();
            for s in &current {
                let mut restricted = q.clone();
                for &w in &q.variables[..i] {
                    restricted.add_constraint(Constraint::In { var: w, set: s.clone() });
                }
                let values = csp_query_with(&restricted, v, ex.index(), xors, &mut budget)?;
                stats.csp_calls += 1;
                stats.solutions += values.len() as u64;
                for c in values {
                    let mut t = s.clone();
                    t.insert(c);
                    if t.len() <= task.k {
                        stats.partials.insert(t.clone());
                        next.insert(t);
                    }
                }
            }
            current = next;
            if current.is_empty() {
                break;
            }
        }
        out.extend(current.into_iter().filter(|s| s.len() == task.k));
    }
    Ok((out, stats))
}

/// Does the fragment on `s` satisfy some disjunct?
pub(crate) fn subset_matches(ex: &GlobalExample, task: &SubsetTask, s: &Subset) -> Result<bool, CountError> {
    for q in &task.disjuncts {
        let mut restricted = q.clone();
        for &v in &q.variables {
            restricted.add_constraint(Constraint::In { var: v, set: s.clone() });
        }
        if find_solution(&restricted, ex.index(), &[], &mut Budget::unlimited())?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// 95% Wilson score interval for a binomial proportion.
pub(crate) fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Hit rate over uniformly drawn k-subsets, scaled by C(n, k). The flag says
/// whether the relative interval width is within the policy threshold.
pub fn count_sampled<R: Rng + ?Sized>(
    ex: &GlobalExample,
    task: &SubsetTask,
    policy: &CountingPolicy,
    rng: &mut R,
) -> Result<(CountReport, bool), CountError> {
    let n = ex.n_constants();
    let total = binomial(n, task.k) as f64;
    if task.k > n || policy.sample_budget == 0 {
        let report =
            CountReport { value: 0.0, method: CountMethod::Sampled, epsilon: None, delta: None, ci: Some((0.0, 0.0)) };
        return Ok((report, task.k > n));
    }
    let mut hits = 0;
    for _ in 0..policy.sample_budget {
        let s: Subset = index::sample(rng, n, task.k).iter().map(|i| Constant(i as u32)).collect();
        if subset_matches(ex, task, &s)? {
            hits += 1;
        }
    }
    let p = hits as f64 / policy.sample_budget as f64;
    let (lo, hi) = wilson(hits, policy.sample_budget);
    let usable = p > 0.0 && (hi - lo) / p <= policy.ci_rel_width_threshold;
    let report = CountReport {
        value: p * total,
        method: CountMethod::Sampled,
        epsilon: None,
        delta: None,
        ci: Some((lo * total, hi * total)),
    };
    Ok((report, usable))
}
