use std::cmp::Ordering;
use std::fmt::Write as _;

use super::hard::arg_tuples;
use super::{IsoSet, LabeledExampleSet, StructureError};
use crate::data::GlobalExample;
use crate::logic::{
    canonical_clause, parse_clause, theta_subsumes, Atom, Clause, HornRule, ParseError, Predicate, Symbols, Term,
    Variable,
};
use crate::query::{satisfiable, ConjunctiveQuery, Constraint};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeamConfig {
    /// Beam width.
    pub b: usize,
    /// Maximum body literals.
    pub l: usize,
    /// Maximum variables.
    pub k: usize,
    pub restarts: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig { b: 10, l: 3, k: 3, restarts: 3 }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<(), StructureError> {
        if self.b == 0 || self.k == 0 || self.restarts == 0 {
            return Err(StructureError::Config("beam width, k and restarts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedRule {
    pub rule: HornRule,
    pub restart: usize,
    pub accuracy: f64,
    pub covered_pos: usize,
    pub covered_neg: usize,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Weighted accuracy: covered positives count 1, uncovered negatives count
/// `w_neg`.
pub fn accuracy(covered_pos: usize, n_pos: usize, covered_neg: usize, n_neg: usize, w_neg: f64) -> f64 {
    let denom = n_pos as f64 + n_neg as f64 * w_neg;
    if denom == 0.0 {
        return 0.0;
    }
    (covered_pos as f64 + (n_neg - covered_neg) as f64 * w_neg) / denom
}

struct Scored {
    rule: HornRule,
    clause: Clause,
    key: String,
    pos: Vec<bool>,
    neg: Vec<bool>,
    accuracy: f64,
}

impl Scored {
    fn covered(&self) -> (usize, usize) {
        (self.pos.iter().filter(|&&b| b).count(), self.neg.iter().filter(|&&b| b).count())
    }

    /// Higher accuracy, then fewer body atoms, fewer variables, canonical
    /// text.
    fn order(&self, other: &Scored) -> Ordering {
        other
            .accuracy
            .total_cmp(&self.accuracy)
            .then(self.rule.body.len().cmp(&other.rule.body.len()))
            .then(self.rule.variables().len().cmp(&other.rule.variables().len()))
            .then_with(|| self.key.cmp(&other.key))
    }
}

fn rule_query(rule: &HornRule) -> ConjunctiveQuery {
    let mut q = ConjunctiveQuery::from_atoms(rule.body.iter().cloned());
    for v in rule.head.variables() {
        q.add_variable(v);
    }
    let vars = rule.variables();
    if rule.all_diff && vars.len() > 1 {
        q.add_constraint(Constraint::AllDiff(vars));
    }
    q
}

fn score(
    ex: &GlobalExample,
    examples: &LabeledExampleSet,
    rule: HornRule,
    parent: Option<(&[bool], &[bool])>,
) -> Scored {
    let q = rule_query(&rule);
    let test = |a: &Atom| {
        let mut qa = q.clone();
        for (t, c) in rule.head.args.iter().zip(a.ground_args()) {
            if let Term::Var(v) = t {
                qa.add_constraint(Constraint::In { var: *v, set: [c].into_iter().collect() });
            }
        }
        satisfiable(&qa, ex.index())
    };
    let run = |atoms: &[Atom], prev: Option<&[bool]>| -> Vec<bool> {
        atoms.iter().enumerate().map(|(i, a)| prev.is_none_or(|p| p[i]) && test(a)).collect()
    };
    let pos = run(&examples.positives, parent.map(|p| p.0));
    let neg = run(&examples.negatives, parent.map(|p| p.1));
    let clause = rule.to_clause();
    let key = canonical_clause(&clause).to_string();
    let mut s = Scored { rule, clause, key, pos, neg, accuracy: 0.0 };
    let (cp, cn) = s.covered();
    s.accuracy = accuracy(cp, examples.positives.len(), cn, examples.negatives.len(), examples.w_neg);
    s
}

fn extensions(rule: &HornRule, signature: &[Predicate], k: usize) -> Vec<HornRule> {
    let n = rule.variables().len();
    let mut out = Vec::new();
    for p in signature {
        for args in arg_tuples(p.arity(), n, k) {
            let atom = Atom::new(p.clone(), args.into_iter().map(|v| Term::Var(Variable(v))).collect());
            if atom == rule.head || rule.body.contains(&atom) {
                continue;
            }
            let mut body = rule.body.clone();
            body.push(atom);
            out.push(HornRule { head: rule.head.clone(), body, all_diff: true });
        }
    }
    out
}

fn learned(s: &Scored, restart: usize, examples: &LabeledExampleSet) -> LearnedRule {
    let (covered_pos, covered_neg) = s.covered();
    LearnedRule {
        rule: s.rule.clone(),
        restart,
        accuracy: s.accuracy,
        covered_pos,
        covered_neg,
        n_pos: examples.positives.len(),
        n_neg: examples.negatives.len(),
    }
}

/// Horn rules for `examples.predicate`, one per restart at most; every
/// restart discards refinements of rules found before.
pub fn beam_search(
    ex: &GlobalExample,
    examples: &LabeledExampleSet,
    cfg: &BeamConfig,
) -> Result<Vec<LearnedRule>, StructureError> {
    cfg.validate()?;
    let p = &examples.predicate;
    let head = Atom::new(p.clone(), (0..p.arity() as u32).map(|i| Term::Var(Variable(i))).collect());
    if p.arity() > cfg.k {
        return Ok(Vec::new());
    }
    let signature: Vec<Predicate> = ex.signature().iter().cloned().collect();
    let mut found: Vec<LearnedRule> = Vec::new();
    let mut forbidden: Vec<Clause> = Vec::new();
    for restart in 0..cfg.restarts {
        let blocked = |c: &Clause, forbidden: &[Clause], found: &[LearnedRule]| {
            forbidden.iter().any(|f| theta_subsumes(f, c))
                || found.iter().any(|r| theta_subsumes(&r.rule.to_clause(), c))
        };
        let root = HornRule::new(head.clone(), Vec::new());
        if blocked(&root.to_clause(), &forbidden, &found) {
            break;
        }
        let root = score(ex, examples, root, None);
        let mut seen = IsoSet::default();
        seen.insert(&root.clause);
        let mut best: Option<Scored> = None;
        let mut beam = vec![root];
        loop {
            let mut cands: Vec<Scored> = Vec::new();
            for parent in &beam {
                if parent.rule.body.len() >= cfg.l {
                    continue;
                }
                for ext in extensions(&parent.rule, &signature, cfg.k) {
                    let clause = ext.to_clause();
                    if !seen.insert(&clause) || blocked(&clause, &forbidden, &found) {
                        continue;
                    }
                    let s = score(ex, examples, ext, Some((&parent.pos, &parent.neg)));
                    if s.covered().0 == 0 {
                        forbidden.retain(|f| !theta_subsumes(&s.clause, f));
                        forbidden.push(s.clause);
                        continue;
                    }
                    cands.push(s);
                }
            }
            for s in beam.drain(..) {
                if s.covered().0 > 0 && best.as_ref().is_none_or(|b| s.order(b) == Ordering::Less) {
                    best = Some(s);
                }
            }
            if cands.is_empty() {
                break;
            }
            cands.sort_by(|a, b| a.order(b));
            cands.truncate(cfg.b);
            beam = cands;
        }
        match best {
            Some(s) => found.push(learned(&s, restart, examples)),
            None => break,
        }
    }
    Ok(found)
}

/// Candidate file text (`cand :: <clause>` per rule) and the matching
/// provenance log.
pub fn write_candidates(rules: &[LearnedRule], symbols: &Symbols) -> (String, String) {
    let mut cands = String::new();
    let mut log = String::new();
    for r in rules {
        writeln!(cands, "cand :: {}", r.rule.to_clause().display(symbols)).unwrap();
        writeln!(
            log,
            "{} restart={} accuracy={:.6} pos={}/{} neg={}/{}",
            r.rule.head.predicate, r.restart, r.accuracy, r.covered_pos, r.n_pos, r.covered_neg, r.n_neg
        )
        .unwrap();
    }
    (cands, log)
}

/// Horn rules from a candidate file.
pub fn parse_candidates(text: &str, symbols: &mut Symbols) -> Result<Vec<HornRule>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let body = line
            .strip_prefix("cand")
            .and_then(|r| r.trim_start().strip_prefix("::"))
            .ok_or_else(|| ParseError::new("expected `cand :: <clause>`").at_line(i + 1))?;
        let c = parse_clause(body, symbols).map_err(|e| e.at_line(i + 1))?;
        out.push(HornRule::from_clause(&c).ok_or_else(|| ParseError::new("not a Horn clause").at_line(i + 1))?);
    }
    Ok(out)
}
