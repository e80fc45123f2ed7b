use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PipelineError;
use crate::counting::{approx_mc, CellOracle, CountError, CountingPolicy};
use crate::data::{language_atoms, GlobalExample};
use crate::logic::{ground_clause, Atom, Clause, Constant, Predicate, Symbols};
use crate::possibilistic::StratifiedTheory;
use crate::query::XorConstraint;
use crate::sat::{GroundCNF, Lit, SolveResult, Solver};

/// Expected models per hashed cell, and the largest cell accepted.
const CELL_TARGET: f64 = 16.0;
const CELL_MAX: usize = 64;
const MAX_ATTEMPTS: usize = 500;

/// Worlds satisfying the formulas above one level and violating some
/// formula at that level; auxiliary variables follow the atom variables.
struct Region {
    possibility: f64,
    n_vars: usize,
    clauses: Vec<Vec<Lit>>,
    count: f64,
    models: Option<Vec<Vec<bool>>>,
}

impl Region {
    fn new(atoms: &[Atom], above: &[&Clause], at: &[&Clause], constants: &[Constant], possibility: f64) -> Self {
        let mut cnf = GroundCNF::with_atoms(atoms);
        for c in above {
            cnf.add_grounded(c, constants);
        }
        let mut n_vars = atoms.len();
        let mut clauses: Vec<Vec<Lit>> = cnf.clauses().to_vec();
        let groundings: Vec<Vec<Lit>> = at
            .iter()
            .flat_map(|c| ground_clause(c, constants))
            .map(|g| g.literals().iter().map(|l| cnf.literal(l)).collect())
            .collect();
        if !at.is_empty() && !groundings.iter().any(|g| g.is_empty()) {
            // aux ↔ every literal of the grounding is false
            let mut any = Vec::new();
            for g in groundings {
                let aux = n_vars;
                n_vars += 1;
                for &l in &g {
                    clauses.push(vec![Lit::new(aux, false), !l]);
                }
                let mut back = g.clone();
                back.push(Lit::new(aux, true));
                clauses.push(back);
                any.push(Lit::new(aux, true));
            }
            clauses.push(any);
        }
        Region { possibility, n_vars, clauses, count: 0.0, models: None }
    }

    fn solver(&self, xors: &[XorConstraint]) -> Solver {
        let mut s = Solver::with_vars(self.n_vars);
        for c in &self.clauses {
            s.add_clause(c);
        }
        s.add_xors(xors);
        s
    }

    /// Up to `limit` distinct models, projected on the first `width` variables.
    fn enumerate(&self, xors: &[XorConstraint], width: usize, limit: usize) -> Vec<Vec<bool>> {
        let mut s = self.solver(xors);
        let mut out = Vec::new();
        while out.len() < limit && s.solve() == SolveResult::Sat {
            let m: Vec<bool> = (0..width).map(|v| s.model_value(v)).collect();
            let block: Vec<Lit> = (0..width).map(|v| Lit::new(v, !m[v])).collect();
            out.push(m);
            if !s.add_clause(&block) {
                break;
            }
        }
        out
    }
}

struct RegionCells<'a> {
    region: &'a Region,
    width: usize,
}

impl CellOracle for RegionCells<'_> {
    fn width(&self) -> usize {
        self.width
    }

    fn bounded_count(&mut self, xors: &[XorConstraint], limit: usize) -> Result<usize, CountError> {
        Ok(self.region.enumerate(xors, self.width, limit + 1).len())
    }
}

/// Draws worlds over `n` constants with probability proportional to their
/// possibility: a level is chosen by its mass, then a uniform model of that
/// level's region through random parity cells.
pub struct WorldSampler {
    atoms: Vec<Atom>,
    regions: Vec<Region>,
    signature: BTreeSet<Predicate>,
    n: usize,
}

fn random_xors(rng: &mut impl Rng, width: usize, m: usize) -> Vec<XorConstraint> {
    (0..m)
        .map(|_| {
            let vars: Vec<usize> = (0..width).filter(|_| rng.gen_bool(0.5)).collect();
            XorConstraint::new(vars, rng.gen_bool(0.5))
        })
        .collect()
}

impl WorldSampler {
    pub fn new(
        theory: &StratifiedTheory,
        signature: &BTreeSet<Predicate>,
        n: usize,
        policy: &CountingPolicy,
        rng: &mut impl Rng,
    ) -> Result<Self, PipelineError> {
        let mut signature = signature.clone();
        for f in theory.formulas() {
            signature.extend(f.clause.literals().iter().map(|l| l.atom.predicate.clone()));
        }
        let atoms = language_atoms(&signature, n);
        let constants: Vec<Constant> = (0..n as u32).map(Constant).collect();
        let hard: Vec<&Clause> = theory.formulas().iter().filter(|f| f.weight >= 1.0).map(|f| &f.clause).collect();
        if Region::new(&atoms, &hard, &[], &constants, 0.0).enumerate(&[], atoms.len(), 1).is_empty() {
            return Err(PipelineError::stage("synth", "the hard rules have no model"));
        }
        let mut regions = Vec::new();
        for level in theory.levels().into_iter().filter(|&l| l < 1.0) {
            let above: Vec<&Clause> =
                theory.formulas().iter().filter(|f| f.weight > level).map(|f| &f.clause).collect();
            let at: Vec<&Clause> = theory.formulas().iter().filter(|f| f.weight == level).map(|f| &f.clause).collect();
            regions.push(Region::new(&atoms, &above, &at, &constants, 1.0 - level));
        }
        let all: Vec<&Clause> = theory.formulas().iter().map(|f| &f.clause).collect();
        regions.push(Region::new(&atoms, &all, &[], &constants, 1.0));
        let width = atoms.len();
        for r in &mut regions {
            let out = approx_mc(&mut RegionCells { region: r, width }, policy.epsilon, policy.delta, u64::MAX, rng)
                .map_err(|e| PipelineError::counting("synth", &e))?;
            r.count = out.estimate;
            if out.exact {
                r.models = Some(r.enumerate(&[], width, usize::MAX));
            }
        }
        if regions.iter().all(|r| r.count * r.possibility <= 0.0) {
            return Err(PipelineError::stage("synth", "no world has positive possibility"));
        }
        Ok(WorldSampler { atoms, regions, signature, n })
    }

    /// (possibility, model count) per region, lowest level first.
    pub fn regions(&self) -> Vec<(f64, f64)> {
        self.regions.iter().map(|r| (r.possibility, r.count)).collect()
    }

    pub fn draw(&self, rng: &mut impl Rng) -> Result<BTreeSet<Atom>, PipelineError> {
        let masses: Vec<f64> = self.regions.iter().map(|r| r.count * r.possibility).collect();
        let total: f64 = masses.iter().sum();
        let mut x = rng.gen::<f64>() * total;
        let mut pick = masses.iter().rposition(|&m| m > 0.0).expect("some mass");
        for (i, &m) in masses.iter().enumerate() {
            if x < m {
                pick = i;
                break;
            }
            x -= m;
        }
        let region = &self.regions[pick];
        let width = self.atoms.len();
        let model = match &region.models {
            Some(models) => models.choose(rng).expect("a region with mass has models").clone(),
            None => {
                let m = (region.count / CELL_TARGET).log2().floor().max(0.0) as usize;
                let mut found = None;
                for _ in 0..MAX_ATTEMPTS {
                    let cell = region.enumerate(&random_xors(rng, width, m), width, CELL_MAX + 1);
                    if cell.is_empty() || cell.len() > CELL_MAX {
                        continue;
                    }
                    // accepting with probability |cell| / CELL_MAX makes every model equally likely
                    if rng.gen_range(0..CELL_MAX) < cell.len() {
                        found = cell.choose(rng).cloned();
                        break;
                    }
                }
                found.ok_or_else(|| PipelineError::Stage {
                    stage: "synth",
                    message: format!("no cell accepted in {MAX_ATTEMPTS} attempts"),
                    budget: true,
                })?
            }
        };
        Ok(self.atoms.iter().zip(model).filter(|(_, v)| *v).map(|(a, _)| a.clone()).collect())
    }

    /// A drawn world as data over constants `c1`, …, `cn`.
    pub fn draw_example(&self, rng: &mut impl Rng) -> Result<GlobalExample, PipelineError> {
        let mut symbols = Symbols::new();
        for i in 1..=self.n {
            symbols.intern(&format!("c{i}"));
        }
        let world = self.draw(rng)?;
        GlobalExample::new(symbols, world, self.signature.iter().cloned()).map_err(|e| PipelineError::stage("synth", e))
    }
}

/// One world over `n_constants` drawn from the theory's distribution.
pub fn synth_generate(
    theory: &StratifiedTheory,
    signature: &BTreeSet<Predicate>,
    n_constants: usize,
    seed: u64,
    policy: &CountingPolicy,
) -> Result<GlobalExample, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WorldSampler::new(theory, signature, n_constants, policy, &mut rng)?.draw_example(&mut rng)
}
