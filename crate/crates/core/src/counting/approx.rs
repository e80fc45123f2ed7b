use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use rand::Rng;

use super::{break_fresh_symmetry, CountError, SubsetTask};
use crate::data::GlobalExample;
use crate::query::{for_each_solution, Budget, XorConstraint};

/// A solution space whose members are Boolean vectors over `width()`
/// indicators, counted cell by cell under parity constraints.
pub trait CellOracle {
    fn width(&self) -> usize;

    /// `min(|cell|, limit + 1)` for the cell selected by `xors`.
    fn bounded_count(&mut self, xors: &[XorConstraint], limit: usize) -> Result<usize, CountError>;
}

/// Largest cell size treated as "small".
pub fn pivot(epsilon: f64) -> usize {
    (9.84 * (1.0 + epsilon / (1.0 + epsilon)) * (1.0 + 1.0 / epsilon).powi(2)).ceil() as usize
}

pub fn rounds(delta: f64) -> usize {
    (17.0 * (3.0 / delta).log2()).ceil() as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOutcome {
    pub estimate: f64,
    /// The whole space fit under the pivot, so the estimate is exact.
    pub exact: bool,
    pub rounds: usize,
    pub failed_rounds: usize,
    pub oracle_calls: usize,
}

/// ApproxMC2: nested random parity hashes, a galloping search per round for
/// the number m of rows leaving a small cell, and the median of
/// `|cell|·2^m` over the rounds.
pub fn approx_mc<O: CellOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &mut O,
    epsilon: f64,
    delta: f64,
    pivot_cap: u64,
    rng: &mut R,
) -> Result<ApproxOutcome, CountError> {
    let thresh = pivot(epsilon).min(pivot_cap.max(1) as usize);
    let mut calls = 1;
    let c0 = oracle.bounded_count(&[], thresh)?;
    if c0 <= thresh {
        return Ok(ApproxOutcome {
            estimate: c0 as f64,
            exact: true,
            rounds: 0,
            failed_rounds: 0,
            oracle_calls: calls,
        });
    }
    let n = oracle.width();
    let t = rounds(delta);
    let mut estimates = Vec::with_capacity(t);
    let mut m_prev = 1;
    for _ in 0..t {
        let rows: Vec<XorConstraint> = (0..n)
            .map(|_| {
                let vars: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                XorConstraint::new(vars, rng.gen_bool(0.5))
            })
            .collect();
        let mut cache: HashMap<usize, usize> = HashMap::from([(0, c0)]);
        let mut count = |m: usize| -> Result<usize, CountError> {
            if let Some(&c) = cache.get(&m) {
                return Ok(c);
            }
            calls += 1;
            let c = oracle.bounded_count(&rows[..m], thresh)?;
            cache.insert(m, c);
            Ok(c)
        };
        if count(n)? > thresh {
            continue;
        }
        // invariant: cell at `lo` rows is big, at `hi` rows small
        let (mut lo, mut hi) = (0, n);
        let start = m_prev.clamp(1, n);
        if count(start)? <= thresh {
            hi = start;
            let mut step = 1;
            while hi - lo > step {
                let probe = hi - step;
                if count(probe)? <= thresh {
                    hi = probe;
                    step *= 2;
                } else {
                    lo = probe;
                    break;
                }
            }
        } else {
            lo = start;
            let mut step = 1;
            while lo + step < hi {
                let probe = lo + step;
                if count(probe)? <= thresh {
                    hi = probe;
                    break;
                }
                lo = probe;
                step *= 2;
            }
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if count(mid)? <= thresh {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        estimates.push(count(hi)? as f64 * 2f64.powi(hi as i32));
        m_prev = hi;
    }
    if estimates.is_empty() {
        return Err(CountError::Budget(format!("all {t} hashing rounds failed")));
    }
    let failed_rounds = t - estimates.len();
    estimates.sort_by(f64::total_cmp);
    let mid = estimates.len() / 2;
    let estimate = if estimates.len() % 2 == 1 { estimates[mid] } else { (estimates[mid - 1] + estimates[mid]) / 2.0 };
    Ok(ApproxOutcome { estimate, exact: false, rounds: t, failed_rounds, oracle_calls: calls })
}

/// Cells of the matching k-subsets of a task; indicator i is constant i.
pub struct SubsetCells<'a> {
    ex: &'a GlobalExample,
    task: &'a SubsetTask,
    node_limit: Option<u64>,
}

impl<'a> SubsetCells<'a> {
    pub fn new(ex: &'a GlobalExample, task: &'a SubsetTask, node_limit: Option<u64>) -> Self {
        SubsetCells { ex, task, node_limit }
    }
}

impl CellOracle for SubsetCells<'_> {
    fn width(&self) -> usize {
        self.ex.n_constants()
    }

    fn bounded_count(&mut self, xors: &[XorConstraint], limit: usize) -> Result<usize, CountError> {
        let mut budget = self.node_limit.map_or_else(Budget::unlimited, Budget::limited);
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        for q in &self.task.disjuncts {
            let q = break_fresh_symmetry(q);
            for_each_solution(&q, self.ex.index(), xors, &mut budget, |s| {
                let mut key: Vec<u32> = s.assignment.values().map(|c| c.0).collect();
                key.sort_unstable();
                key.dedup();
                seen.insert(key);
                if seen.len() > limit {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })?;
            if seen.len() > limit {
                break;
            }
        }
        Ok(seen.len())
    }
}
