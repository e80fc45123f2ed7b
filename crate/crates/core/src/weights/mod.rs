//! Weight learning: stratum parameters from counting, the likelihood
//! program over stratum weights, greedy ordering search and simplification.

mod gp;
mod greedy;
mod params;

use thiserror::Error;

use crate::counting::CountError;

pub use gp::{grid_optimum, log_likelihood, solve_gp, solve_gp_gradient, GpResiduals, GpSolution};
pub use greedy::{greedy_build, simplify, GreedyConfig, GreedyOutcome, GreedyStep};
pub use params::{CutCounts, ParamEstimator, StratumParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("counting failed on cut [{cut}]: {source}")]
    Count { cut: String, source: CountError },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

#[cfg(test)]
mod tests;
