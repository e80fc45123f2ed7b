use std::fmt::Write as _;
use std::path::PathBuf;

use super::PipelineError;
use crate::counting::{CountingPolicy, ModelCountMode};
use crate::structure::{BeamConfig, ExampleConfig, HardRuleConfig, NegativeCheck};
use crate::weights::GreedyConfig;

/// Every recognized key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("k", "width of rules, local examples and counts"),
    ("seed", "master rng seed"),
    ("jobs", "predicates learned concurrently"),
    ("data", "training data file"),
    ("output", "theory file to write"),
    ("hard.t", "literal limit of hard rules with a binary literal"),
    ("hard.t_prime", "literal limit of hard rules over unary predicates"),
    ("beam.b", "beam width"),
    ("beam.l", "maximum body literals"),
    ("beam.restarts", "restarts per predicate"),
    ("examples.budget", "negative candidates drawn per predicate"),
    ("examples.positive_budget", "positive subsample size, 0 for all"),
    ("examples.check", "negative check: open or closed"),
    ("counting.epsilon", "hashing tolerance"),
    ("counting.delta", "hashing confidence"),
    ("counting.exact_limit_small", "node budget of the first exact attempt"),
    ("counting.exact_limit_large", "node budget of the second exact attempt"),
    ("counting.ci_threshold", "relative interval width accepted from sampling"),
    ("counting.sample_budget", "subsets drawn by the sampling tier"),
    ("counting.cell_limit", "node budget of one hashed cell"),
    ("counting.models", "model counting: ground or cutting-plane"),
    ("greedy.passes", "passes over the candidate list"),
    ("greedy.min_gain", "likelihood gain that accepts a candidate"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub seed: u64,
    pub jobs: usize,
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub hard_t: usize,
    pub hard_t_prime: usize,
    pub beam: BeamConfig,
    pub examples: ExampleConfig,
    pub policy: CountingPolicy,
    pub models: ModelCountMode,
    pub greedy: GreedyConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let hard = HardRuleConfig::default();
        PipelineConfig {
            k: 3,
            seed: 0,
            jobs: 1,
            data: None,
            output: None,
            hard_t: hard.t,
            hard_t_prime: hard.t_prime,
            beam: BeamConfig::default(),
            examples: ExampleConfig::default(),
            policy: CountingPolicy::default(),
            models: ModelCountMode::Ground,
            greedy: GreedyConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value.trim().parse().map_err(|_| PipelineError::Config(format!("bad value `{value}` for `{key}`")))
}

impl PipelineConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| PipelineError::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        match key {
            "k" => self.k = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "hard.t" => self.hard_t = num(key, value)?,
            "hard.t_prime" => self.hard_t_prime = num(key, value)?,
            "beam.b" => self.beam.b = num(key, value)?,
            "beam.l" => self.beam.l = num(key, value)?,
            "beam.restarts" => self.beam.restarts = num(key, value)?,
            "examples.budget" => self.examples.budget = num(key, value)?,
            "examples.positive_budget" => {
                let b: usize = num(key, value)?;
                self.examples.positive_budget = (b > 0).then_some(b);
            }
            "examples.check" => {
                self.examples.check = match value {
                    "open" => NegativeCheck::OpenWorld,
                    "closed" => NegativeCheck::ClosedWorld,
                    _ => return Err(PipelineError::Config(format!("`{key}` must be open or closed"))),
                }
            }
            "counting.epsilon" => self.policy.epsilon = num(key, value)?,
            "counting.delta" => self.policy.delta = num(key, value)?,
            "counting.exact_limit_small" => self.policy.exact_limit_small = num(key, value)?,
            "counting.exact_limit_large" => self.policy.exact_limit_large = num(key, value)?,
            "counting.ci_threshold" => self.policy.ci_rel_width_threshold = num(key, value)?,
            "counting.sample_budget" => self.policy.sample_budget = num(key, value)?,
            "counting.cell_limit" => self.policy.cell_limit = num(key, value)?,
            "counting.models" => {
                self.models = match value {
                    "ground" => ModelCountMode::Ground,
                    "cutting-plane" => ModelCountMode::CuttingPlane,
                    _ => return Err(PipelineError::Config(format!("`{key}` must be ground or cutting-plane"))),
                }
            }
            "greedy.passes" => self.greedy.passes = num(key, value)?,
            "greedy.min_gain" => self.greedy.min_gain = num(key, value)?,
            _ => return Err(PipelineError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.k == 0 || self.k > 8 {
            return bad("k must lie in 1..=8");
        }
        if self.jobs == 0 {
            return bad("jobs must be positive");
        }
        if self.policy.epsilon.is_nan()
            || self.policy.epsilon <= 0.0
            || !(self.policy.delta > 0.0 && self.policy.delta < 1.0)
        {
            return bad("counting.epsilon must be positive and counting.delta in (0, 1)");
        }
        if self.greedy.min_gain.is_nan() || self.greedy.min_gain < 0.0 {
            return bad("greedy.min_gain must be non-negative");
        }
        self.hard().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.beam().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn hard(&self) -> HardRuleConfig {
        HardRuleConfig { t: self.hard_t, t_prime: self.hard_t_prime, k: self.k }
    }

    pub fn beam(&self) -> BeamConfig {
        BeamConfig { k: self.k, ..self.beam.clone() }
    }

    /// The configuration in the same `key = value` form `parse` reads.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in KEYS {
            let value = match *key {
                "k" => self.k.to_string(),
                "seed" => self.seed.to_string(),
                "jobs" => self.jobs.to_string(),
                "data" => match &self.data {
                    Some(p) => p.display().to_string(),
                    None => continue,
                },
                "output" => match &self.output {
                    Some(p) => p.display().to_string(),
                    None => continue,
                },
                "hard.t" => self.hard_t.to_string(),
                "hard.t_prime" => self.hard_t_prime.to_string(),
                "beam.b" => self.beam.b.to_string(),
                "beam.l" => self.beam.l.to_string(),
                "beam.restarts" => self.beam.restarts.to_string(),
                "examples.budget" => self.examples.budget.to_string(),
                "examples.positive_budget" => self.examples.positive_budget.unwrap_or(0).to_string(),
                "examples.check" => match self.examples.check {
                    NegativeCheck::OpenWorld => "open".into(),
                    NegativeCheck::ClosedWorld => "closed".into(),
                },
                "counting.epsilon" => format!("{:?}", self.policy.epsilon),
                "counting.delta" => format!("{:?}", self.policy.delta),
                "counting.exact_limit_small" => self.policy.exact_limit_small.to_string(),
                "counting.exact_limit_large" => self.policy.exact_limit_large.to_string(),
                "counting.ci_threshold" => format!("{:?}", self.policy.ci_rel_width_threshold),
                "counting.sample_budget" => self.policy.sample_budget.to_string(),
                "counting.cell_limit" => self.policy.cell_limit.to_string(),
                "counting.models" => match self.models {
                    ModelCountMode::Ground => "ground".into(),
                    ModelCountMode::CuttingPlane => "cutting-plane".into(),
                },
                "greedy.passes" => self.greedy.passes.to_string(),
                "greedy.min_gain" => format!("{:?}", self.greedy.min_gain),
                _ => unreachable!("every key is listed"),
            };
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }
}
