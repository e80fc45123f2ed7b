use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::WeightError;
use crate::counting::{
    count_dispatch, model_count, CountMethod, CountReport, CountingPolicy, ModelCountMode, SubsetTask,
};
use crate::data::{binomial, GlobalExample};
use crate::logic::{canonical_clause, Clause};
use crate::query::ConjunctiveQuery;

/// Counts for the ordering ⊥ = α₁, α₂, …, α_n, indexed by cut i = 1..=n+1.
#[derive(Clone, Debug, PartialEq)]
pub struct StratumParams {
    pub ordering: Vec<Clause>,
    pub e_counts: Vec<f64>,
    pub m_counts: Vec<f64>,
    pub e_methods: Vec<CountMethod>,
    pub m_methods: Vec<CountMethod>,
}

impl StratumParams {
    /// Formula count n, ⊥ included.
    pub fn n(&self) -> usize {
        self.ordering.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutCounts {
    pub e: CountReport,
    pub m: CountReport,
}

/// Estimates stratum parameters against fixed data and hard rules, caching
/// counts per cut. Each cut's counts draw from an rng seeded by the cut
/// itself, so cached and fresh values agree.
pub struct ParamEstimator<'a> {
    ex: &'a GlobalExample,
    delta: Vec<Clause>,
    k: usize,
    policy: CountingPolicy,
    mode: ModelCountMode,
    seed: u64,
    cache: HashMap<String, CutCounts>,
    pub hits: usize,
    pub misses: usize,
}

fn fnv(text: &str) -> u64 {
    text.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
}

impl<'a> ParamEstimator<'a> {
    pub fn new(
        ex: &'a GlobalExample,
        delta: &[Clause],
        k: usize,
        policy: CountingPolicy,
        mode: ModelCountMode,
        seed: u64,
    ) -> Self {
        ParamEstimator { ex, delta: delta.to_vec(), k, policy, mode, seed, cache: HashMap::new(), hits: 0, misses: 0 }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> &[Clause] {
        &self.delta
    }

    fn key(cut: &[Clause]) -> String {
        let mut parts: Vec<String> = cut.iter().map(|c| canonical_clause(c).to_string()).collect();
        parts.sort();
        parts.dedup();
        parts.join(" ; ")
    }

    /// Counts for Δ ∪ `cut`, without ⊥.
    pub fn cut_counts(&mut self, cut: &[Clause]) -> Result<CutCounts, WeightError> {
        let key = Self::key(cut);
        if let Some(c) = self.cache.get(&key) {
            self.hits += 1;
            return Ok(c.clone());
        }
        self.misses += 1;
        let counts = self.compute(cut, &key)?;
        self.cache.insert(key, counts.clone());
        Ok(counts)
    }

    fn compute(&self, cut: &[Clause], key: &str) -> Result<CutCounts, WeightError> {
        let err = |source| WeightError::Count { cut: key.to_string(), source };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv(key));
        let formulas: Vec<Clause> = self.delta.iter().chain(cut).cloned().collect();
        let total = binomial(self.ex.n_constants(), self.k) as f64;
        let negations: Vec<ConjunctiveQuery> = formulas.iter().map(ConjunctiveQuery::negation_of).collect();
        let e = if negations.is_empty() || self.ex.n_constants() < self.k {
            CountReport::exact(binomial(self.ex.n_constants(), self.k), CountMethod::ExactAlg1)
        } else {
            let task = SubsetTask::union(self.k, &negations);
            let bad = count_dispatch(self.ex, &task, &self.policy, &mut rng).map_err(err)?;
            CountReport { value: (total - bad.value).max(0.0), ..bad }
        };
        let m = model_count(&formulas, self.ex.signature(), self.k, self.mode, &self.policy, &mut rng).map_err(err)?;
        Ok(CutCounts { e, m })
    }

    /// Parameters for ⊥ followed by `soft` in ascending weight order. Counts
    /// are clamped to be non-decreasing along the nested cuts.
    pub fn estimate(&mut self, soft: &[Clause]) -> Result<StratumParams, WeightError> {
        let n = soft.len() + 1;
        let mut e_counts = vec![0.0];
        let mut m_counts = vec![0.0];
        let mut e_methods = vec![CountMethod::ExactNaive];
        let mut m_methods = vec![CountMethod::ExactNaive];
        for i in 1..=n {
            let c = self.cut_counts(&soft[i - 1..])?;
            e_counts.push(c.e.value);
            m_counts.push(c.m.value);
            e_methods.push(c.e.method);
            m_methods.push(c.m.method);
        }
        for counts in [&mut e_counts, &mut m_counts] {
            for i in (0..n).rev() {
                counts[i] = counts[i].min(counts[i + 1]);
            }
        }
        let mut ordering = vec![Clause::bottom()];
        ordering.extend(soft.iter().cloned());
        Ok(StratumParams { ordering, e_counts, m_counts, e_methods, m_methods })
    }
}
