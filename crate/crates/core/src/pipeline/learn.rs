use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{read_file, with_suffix, write_file, PipelineConfig, PipelineError};
use crate::data::{parse_example, GlobalExample};
use crate::logic::{canonical_clause, Clause, Predicate};
use crate::possibilistic::StratifiedTheory;
use crate::structure::{
    beam_search, build_examples, learn_hard_rules, write_candidates, IsoSet, LearnedRule, StructureError,
};
use crate::weights::{greedy_build, simplify, GreedyOutcome, ParamEstimator};

/// Artifacts of a pipeline run, filled stage by stage.
#[derive(Clone, Debug, Default)]
pub struct Learned {
    pub hard: Vec<Clause>,
    /// Soft candidates in the order weight learning visits them.
    pub rules: Vec<LearnedRule>,
    pub greedy: Option<GreedyOutcome>,
    pub theory: Option<StratifiedTheory>,
    pub warnings: Vec<String>,
}

impl Learned {
    /// The final theory, or the most complete one reached.
    pub fn best_theory(&self) -> StratifiedTheory {
        if let Some(t) = &self.theory {
            return t.clone();
        }
        if let Some(g) = &self.greedy {
            return g.theory.clone();
        }
        StratifiedTheory::new(self.hard.iter().map(|c| (c.clone(), 1.0))).expect("weight 1 is valid")
    }

    /// Warnings, candidate provenance and the greedy decisions.
    pub fn log_text(&self, ex: &GlobalExample) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            writeln!(out, "# warning: {w}").unwrap();
        }
        out.push_str(&write_candidates(&self.rules, ex.symbols()).1);
        if let Some(g) = &self.greedy {
            for s in &g.steps {
                writeln!(out, "{}", s.log_line()).unwrap();
            }
        }
        out
    }
}

fn predicate_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn learn_predicate(
    ex: &GlobalExample,
    delta: &[Clause],
    p: &Predicate,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<Vec<LearnedRule>, StructureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = build_examples(ex, delta, p, &cfg.examples, &mut rng)?;
    beam_search(ex, &examples, &cfg.beam())
}

fn rule_key(r: &LearnedRule) -> String {
    canonical_clause(&r.rule.to_clause()).to_string()
}

/// Labeled examples and beam search for every predicate, merged into one
/// candidate list: descending accuracy, ties by canonical form, isomorphic
/// duplicates dropped.
pub fn learn_rules(
    ex: &GlobalExample,
    delta: &[Clause],
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Vec<LearnedRule>, PipelineError> {
    let preds: Vec<Predicate> = ex.signature().iter().cloned().collect();
    let mut results: Vec<Option<Result<Vec<LearnedRule>, StructureError>>> = vec![None; preds.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.jobs.min(preds.len()).max(1))
            .map(|j| {
                let (preds, hard) = (&preds, delta);
                scope.spawn(move || {
                    (j..preds.len())
                        .step_by(cfg.jobs)
                        .map(|i| (i, learn_predicate(ex, hard, &preds[i], cfg, predicate_seed(cfg.seed, i))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("rule learning does not panic") {
                results[i] = Some(r);
            }
        }
    });
    let mut rules = Vec::new();
    for (p, r) in preds.iter().zip(results) {
        match r.expect("every predicate is scheduled") {
            Ok(found) => rules.extend(found),
            Err(StructureError::Degenerate(_)) => warnings.push(format!("{p} has no true atoms; skipped")),
            Err(e) => return Err(PipelineError::stage("learn-rules", e)),
        }
    }
    rules.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy).then_with(|| rule_key(a).cmp(&rule_key(b))));
    let mut seen = IsoSet::default();
    rules.retain(|r| seen.insert(&r.rule.to_clause()));
    Ok(rules)
}

/// Hard rules, then per-predicate rule search, weight learning and
/// simplification. Stages record their results in `out` as they finish.
pub fn learn_theory(ex: &GlobalExample, cfg: &PipelineConfig, out: &mut Learned) -> Result<(), PipelineError> {
    cfg.validate()?;
    out.hard = learn_hard_rules(ex, &cfg.hard()).map_err(|e| PipelineError::stage("learn-hard", e))?;
    if ex.atoms().is_empty() {
        out.warnings.push("the data has no atoms; only hard rules are learned".into());
        out.theory = Some(out.best_theory());
        return Ok(());
    }
    out.rules = learn_rules(ex, &out.hard, cfg, &mut out.warnings)?;

    let mut est = ParamEstimator::new(ex, &out.hard, cfg.k, cfg.policy.clone(), cfg.models, cfg.seed);
    let candidates: Vec<_> = out.rules.iter().map(|r| r.rule.clone()).collect();
    let outcome = greedy_build(&candidates, &mut est, &cfg.greedy).map_err(|e| PipelineError::weights(&e))?;
    for s in outcome.steps.iter().filter(|s| s.error.is_some()) {
        out.warnings.push(format!("candidate aborted: {}", s.log_line()));
    }
    let simple = simplify(&outcome.theory, cfg.k);
    out.greedy = Some(outcome);
    out.theory = Some(simple);
    Ok(())
}

fn write_artifacts(ex: &GlobalExample, learned: &Learned, output: &Path, suffix: &str) -> Result<(), PipelineError> {
    write_file(&with_suffix(output, suffix), &learned.best_theory().to_text(ex.symbols()))?;
    write_file(
        &with_suffix(output, &format!(".candidates{suffix}")),
        &write_candidates(&learned.rules, ex.symbols()).0,
    )?;
    write_file(&with_suffix(output, &format!(".log{suffix}")), &learned.log_text(ex))
}

/// Reads the data, learns, and writes the theory next to a `.candidates`
/// and a `.log` file. On failure whatever was learned is written with a
/// `.partial` suffix.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Learned, PipelineError> {
    let data = cfg.data.as_deref().ok_or_else(|| PipelineError::Config("no data path".into()))?;
    let output = cfg.output.as_deref().ok_or_else(|| PipelineError::Config("no output path".into()))?;
    let text = read_file(data)?;
    let ex = parse_example(&text, None)
        .map_err(|e| PipelineError::Input { path: data.to_path_buf(), message: e.to_string() })?;
    let mut learned = Learned::default();
    match learn_theory(&ex, cfg, &mut learned) {
        Ok(()) => {
            write_artifacts(&ex, &learned, output, "")?;
            Ok(learned)
        }
        Err(e) => {
            write_artifacts(&ex, &learned, output, ".partial")?;
            Err(e)
        }
    }
}
