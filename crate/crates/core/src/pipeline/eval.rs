use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::PipelineError;
use crate::data::{language_atoms, GlobalExample};
use crate::logic::{Atom, Constant, Literal, Predicate};
use crate::possibilistic::{MapState, StratifiedTheory};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub s_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Draw evidence from the true atoms only.
    pub positives_only: bool,
    /// Fresh evidence per size instead of growing one sequence per trial.
    pub independent: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { s_max: 15, trials: 20, seed: 0, positives_only: false, independent: false }
    }
}

/// Averages over trials for one evidence size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub s: usize,
    /// Evidence literals actually drawn, after capping.
    pub evidence: usize,
    pub theory_error: f64,
    pub baseline_error: f64,
    /// baseline − theory.
    pub difference: f64,
    pub cumulative: f64,
    pub mean_sat_calls: f64,
    pub max_sat_calls: usize,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub trial_seeds: Vec<u64>,
    pub levels: usize,
    /// ⌈log₂(levels + 1)⌉ + 1.
    pub sat_call_bound: usize,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "s,evidence,theory_error,baseline_error,difference,cumulative,mean_sat_calls,max_sat_calls,mean_seconds\n",
        );
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.s,
                r.evidence,
                r.theory_error,
                r.baseline_error,
                r.difference,
                r.cumulative,
                r.mean_sat_calls,
                r.max_sat_calls,
                r.mean_seconds
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with timings zeroed; everything else is a function of the
    /// inputs and the seed.
    pub fn without_timings(&self) -> EvalReport {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.mean_seconds = 0.0;
        }
        r
    }
}

/// Size of the symmetric difference.
pub fn hamming(a: &BTreeSet<Atom>, b: &BTreeSet<Atom>) -> usize {
    a.symmetric_difference(b).count()
}

fn sat_call_bound(levels: usize) -> usize {
    (usize::BITS - levels.leading_zeros()) as usize + 1
}

struct Inference {
    predicted: BTreeSet<Atom>,
    sat_calls: usize,
    seconds: f64,
}

fn infer(theory: &StratifiedTheory, evidence: &[Literal], constants: &[Constant]) -> Result<Inference, PipelineError> {
    let start = Instant::now();
    let mut state = MapState::new(theory, evidence, constants).map_err(|e| PipelineError::stage("evaluate", e))?;
    let atoms = state.atoms().to_vec();
    let mut predicted = state.prediction(&atoms);
    predicted.extend(evidence.iter().filter(|l| l.positive).map(|l| l.atom.clone()));
    Ok(Inference { predicted, sat_calls: state.cutoff.sat_calls, seconds: start.elapsed().as_secs_f64() })
}

/// Hamming errors of the theory's MAP predictions and of the all-false
/// baseline, per evidence size, averaged over trials.
pub fn evaluate(
    theory: &StratifiedTheory,
    test: &GlobalExample,
    cfg: &EvalConfig,
) -> Result<EvalReport, PipelineError> {
    let mut signature: BTreeSet<Predicate> = test.signature().clone();
    for f in theory.formulas() {
        signature.extend(f.clause.literals().iter().map(|l| l.atom.predicate.clone()));
    }
    let constants: Vec<Constant> = test.constants().collect();
    let universe = language_atoms(&signature, constants.len());
    let truth: BTreeSet<Atom> = test.atoms().clone();
    let pool: Vec<Literal> = universe
        .iter()
        .filter(|a| !cfg.positives_only || truth.contains(a))
        .map(|a| Literal { atom: a.clone(), positive: truth.contains(a) })
        .collect();
    let mut warnings = Vec::new();
    if cfg.s_max > pool.len() {
        warnings.push(format!("evidence size capped at {} available literals", pool.len()));
    }
    let levels = theory.levels().len();
    let bound = sat_call_bound(levels);
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trial_seeds: Vec<u64> = (0..cfg.trials).map(|_| master.gen()).collect();
    let mut sums = vec![(0.0, 0.0, 0usize, 0usize, 0.0); cfg.s_max];
    for &seed in &trial_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order = pool.clone();
        order.shuffle(&mut rng);
        for s in 1..=cfg.s_max {
            let n = s.min(pool.len());
            let evidence: Vec<Literal> = if cfg.independent {
                pool.choose_multiple(&mut rng, n).cloned().collect()
            } else {
                order[..n].to_vec()
            };
            let inf = infer(theory, &evidence, &constants)?;
            if inf.sat_calls > bound {
                return Err(PipelineError::stage(
                    "evaluate",
                    format!("{} consistency calls exceed the bound {bound}", inf.sat_calls),
                ));
            }
            let baseline: BTreeSet<Atom> = evidence.iter().filter(|l| l.positive).map(|l| l.atom.clone()).collect();
            let slot = &mut sums[s - 1];
            slot.0 += hamming(&inf.predicted, &truth) as f64;
            slot.1 += hamming(&baseline, &truth) as f64;
            slot.2 += inf.sat_calls;
            slot.3 = slot.3.max(inf.sat_calls);
            slot.4 += inf.seconds;
        }
    }
    let t = cfg.trials.max(1) as f64;
    let mut cumulative = 0.0;
    let rows = sums
        .into_iter()
        .enumerate()
        .map(|(i, (th, base, calls, max_calls, secs))| {
            let difference = (base - th) / t;
            cumulative += difference;
            EvalRow {
                s: i + 1,
                evidence: (i + 1).min(pool.len()),
                theory_error: th / t,
                baseline_error: base / t,
                difference,
                cumulative,
                mean_sat_calls: calls as f64 / t,
                max_sat_calls: max_calls,
                mean_seconds: secs / t,
            }
        })
        .collect();
    Ok(EvalReport { rows, trial_seeds, levels, sat_call_bound: bound, warnings })
}
