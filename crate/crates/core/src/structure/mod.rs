//! Structure learning: hard-rule mining, labeled example construction and
//! Horn-rule beam search.

mod beam;
mod examples;
mod hard;

use std::collections::HashMap;

use thiserror::Error;

use crate::logic::{clauses_isomorphic, wl_hash, Clause, Predicate};

pub use beam::{accuracy, beam_search, parse_candidates, write_candidates, BeamConfig, LearnedRule};
pub use examples::{build_examples, nontrivial, ExampleConfig, LabeledExampleSet, NegativeCheck};
pub use hard::{hard_rule_candidates, learn_hard_rules, HardRuleConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("predicate {0} is not in the signature")]
    UnknownPredicate(Predicate),
    #[error("predicate {0} has no true atoms")]
    Degenerate(Predicate),
    #[error("{0}")]
    Config(String),
}

/// Clauses kept up to variable renaming, bucketed by WL hash.
#[derive(Default)]
pub(crate) struct IsoSet {
    buckets: HashMap<u64, Vec<Clause>>,
}

impl IsoSet {
    /// Inserts `c` unless an isomorphic clause is present; reports whether
    /// it was new.
    pub(crate) fn insert(&mut self, c: &Clause) -> bool {
        let bucket = self.buckets.entry(wl_hash(c)).or_default();
        if bucket.iter().any(|d| clauses_isomorphic(c, d)) {
            return false;
        }
        bucket.push(c.clone());
        true
    }
}
