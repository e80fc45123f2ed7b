use super::{solve_gp, GpSolution, ParamEstimator, WeightError};
use crate::logic::{Clause, Constant, HornRule};
use crate::possibilistic::StratifiedTheory;
use crate::sat::entails;

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyConfig {
    /// Passes over the candidate list.
    pub passes: usize,
    /// Smallest likelihood gain that accepts a candidate.
    pub min_gain: f64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig { passes: 1, min_gain: 1e-9 }
    }
}

/// One line of the learning log.
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep {
    pub candidate: HornRule,
    /// Best insertion position among the soft formulas, 0 = lowest.
    pub position: Option<usize>,
    pub gain: f64,
    pub accepted: bool,
    pub error: Option<String>,
}

impl GreedyStep {
    pub fn log_line(&self) -> String {
        let pos = self.position.map_or("-".to_string(), |p| p.to_string());
        let verdict = if self.accepted { "accept" } else { "reject" };
        match &self.error {
            Some(e) => format!("{} pos={pos} gain=nan {verdict} error={e}", self.candidate.to_clause()),
            None => format!("{} pos={pos} gain={:.6e} {verdict}", self.candidate.to_clause(), self.gain),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub theory: StratifiedTheory,
    /// Soft formulas in ascending weight order, ⊥ excluded.
    pub ordering: Vec<Clause>,
    pub solution: GpSolution,
    pub steps: Vec<GreedyStep>,
    /// Likelihood after each acceptance, starting from the ⊥-only theory.
    pub trace: Vec<f64>,
}

fn assemble(delta: &[Clause], soft: &[Clause], sol: &GpSolution) -> StratifiedTheory {
    let mut formulas: Vec<(Clause, f64)> = delta.iter().map(|c| (c.clone(), 1.0)).collect();
    formulas.push((Clause::bottom(), sol.lambdas[0]));
    for (c, &l) in soft.iter().zip(&sol.lambdas[1..]) {
        formulas.push((c.clone(), l));
    }
    StratifiedTheory::new(formulas).expect("weights from the program lie in [0, 1] and ascend")
}

/// Starts from Δ and ⊥; inserts each candidate at the position that
/// maximizes the likelihood, keeping it only on strict improvement.
pub fn greedy_build(
    candidates: &[HornRule],
    est: &mut ParamEstimator<'_>,
    cfg: &GreedyConfig,
) -> Result<GreedyOutcome, WeightError> {
    let mut soft: Vec<Clause> = Vec::new();
    let mut sol = solve_gp(&est.estimate(&soft)?)?;
    let mut trace = vec![sol.log_likelihood];
    let mut steps = Vec::new();
    for _ in 0..cfg.passes.max(1) {
        let mut changed = false;
        for cand in candidates {
            let clause = cand.to_clause();
            if soft.contains(&clause) {
                continue;
            }
            let mut best: Option<(usize, GpSolution)> = None;
            let mut error = None;
            for pos in 0..=soft.len() {
                let mut trial = soft.clone();
                trial.insert(pos, clause.clone());
                match est.estimate(&trial).and_then(|p| solve_gp(&p)) {
                    Ok(s) => {
                        if best.as_ref().is_none_or(|b| s.log_likelihood > b.1.log_likelihood) {
                            best = Some((pos, s));
                        }
                    }
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            if let Some(e) = error {
                steps.push(GreedyStep {
                    candidate: cand.clone(),
                    position: None,
                    gain: 0.0,
                    accepted: false,
                    error: Some(e),
                });
                continue;
            }
            let (pos, s) = best.expect("at least one position");
            let gain = s.log_likelihood - sol.log_likelihood;
            let accepted = gain > cfg.min_gain;
            steps.push(GreedyStep { candidate: cand.clone(), position: Some(pos), gain, accepted, error: None });
            if accepted {
                soft.insert(pos, clause);
                sol = s;
                trace.push(sol.log_likelihood);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(GreedyOutcome { theory: assemble(est.delta(), &soft, &sol), ordering: soft, solution: sol, steps, trace })
}

fn constants(k: usize) -> Vec<Constant> {
    (0..k as u32).map(Constant).collect()
}

/// Drops soft formulas entailed by strictly higher levels and body atoms
/// whose removal yields a rule entailed by the higher levels plus the
/// original rule, until nothing changes.
pub fn simplify(theory: &StratifiedTheory, k: usize) -> StratifiedTheory {
    let consts = constants(k);
    let mut formulas: Vec<(Clause, f64)> = theory.formulas().iter().map(|f| (f.clause.clone(), f.weight)).collect();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < formulas.len() {
            let (c, w) = formulas[i].clone();
            if w >= 1.0 || c.is_bottom() {
                i += 1;
                continue;
            }
            let higher: Vec<Clause> = formulas.iter().filter(|f| f.1 > w).map(|f| f.0.clone()).collect();
            if entails(&higher, &consts, &c) {
                formulas.remove(i);
                changed = true;
                continue;
            }
            if let Some(rule) = HornRule::from_clause(&c) {
                for b in 0..rule.body.len() {
                    let mut shorter = rule.clone();
                    shorter.body.remove(b);
                    let general = shorter.to_clause();
                    let mut context = higher.clone();
                    context.push(c.clone());
                    if entails(&context, &consts, &general) {
                        formulas[i].0 = general;
                        changed = true;
                        break;
                    }
                }
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    StratifiedTheory::new(formulas).expect("weights unchanged")
}
