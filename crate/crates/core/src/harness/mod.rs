//! Experiment runner: learners over seeds, learning-curve aggregation and
//! export.

mod config;
mod export;
mod trainer;

use rayon::prelude::*;
use thiserror::Error;

use crate::action_lang::ParseError;
use crate::envs::EnvError;
use crate::feedback::OracleError;
use crate::planner::PlannerError;
use crate::transition::TransitionError;

pub use config::{seeds_from, AgentKind, ConfigError, ExperimentConfig, Hyperparams};
pub use export::{export, manifest, read_manifest, Manifest, RESULTS_FILE, MANIFEST_FILE};
pub use trainer::{EpisodeRecord, PendingStep, Trainer};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("encoding does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("episode {episode}, step {step}: environment left the planned trajectory")]
    PlanDivergence { episode: usize, step: usize },
    #[error("runs have different episode counts ({0} vs {1})")]
    Ragged(usize, usize),
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing results: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

/// Episodes of one run.
pub fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let mut trainer = Trainer::new(cfg, cfg.domain.build(), seed)?;
    (0..cfg.episodes).map(|_| trainer.run_episode()).collect()
}

/// All runs, one per seed, in seed order. Runs execute in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Vec<EpisodeRecord>>, HarnessError> {
    cfg.validate()?;
    cfg.seeds
        .par_iter()
        .map(|&seed| run_single(cfg, seed))
        .collect()
}

/// Pointwise statistics of episode returns across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub mean: Vec<f64>,
    /// Population variance.
    pub variance: Vec<f64>,
    /// Number of runs whose episode had no plan.
    pub no_plan_runs: Vec<usize>,
}

pub fn aggregate(runs: &[Vec<EpisodeRecord>]) -> Result<CurveSummary, HarnessError> {
    let first = runs.first().ok_or(HarnessError::NoRuns)?;
    let n = first.len();
    if let Some(r) = runs.iter().find(|r| r.len() != n) {
        return Err(HarnessError::Ragged(n, r.len()));
    }
    let k = runs.len() as f64;
    let mut summary = CurveSummary {
        mean: Vec::with_capacity(n),
        variance: Vec::with_capacity(n),
        no_plan_runs: Vec::with_capacity(n),
    };
    for e in 0..n {
        let mean = runs.iter().map(|r| r[e].ret).sum::<f64>() / k;
        let var = runs.iter().map(|r| (r[e].ret - mean).powi(2)).sum::<f64>() / k;
        summary.mean.push(mean);
        summary.variance.push(var.max(0.0));
        summary.no_plan_runs.push(runs.iter().filter(|r| r[e].no_plan).count());
    }
    Ok(summary)
}

/// Mean return over episodes `range` of every run.
pub fn mean_return(runs: &[Vec<EpisodeRecord>], range: std::ops::Range<usize>) -> f64 {
    let values: Vec<f64> = runs
        .iter()
        .flat_map(|r| r[range.clone()].iter().map(|e| e.ret))
        .collect();
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ret: f64) -> EpisodeRecord {
        EpisodeRecord {
            episode: 0,
            ret,
            steps: 1,
            plan_length: None,
            feedback_count: 0,
            no_plan: false,
        }
    }

    #[test]
    fn identical_runs_have_zero_variance() {
        let runs = vec![vec![rec(1.0), rec(-3.0)]; 10];
        let s = aggregate(&runs).unwrap();
        assert_eq!(s.mean, vec![1.0, -3.0]);
        assert_eq!(s.variance, vec![0.0, 0.0]);
    }

    #[test]
    fn two_runs_mean_and_variance() {
        let s = aggregate(&[vec![rec(1.0)], vec![rec(3.0)]]).unwrap();
        assert_eq!(s.mean, vec![2.0]);
        assert_eq!(s.variance, vec![1.0]);
    }

    #[test]
    fn ragged_and_empty_inputs_fail() {
        assert!(matches!(
            aggregate(&[vec![rec(1.0)], vec![]]),
            Err(HarnessError::Ragged(1, 0))
        ));
        assert!(matches!(aggregate(&[]), Err(HarnessError::NoRuns)));
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let a = vec![rec(1.0), rec(2.0)];
        let b = vec![rec(5.0), rec(-1.0)];
        let c = vec![rec(0.5), rec(0.0)];
        let x = aggregate(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let y = aggregate(&[c, a, b]).unwrap();
        for (p, q) in x.mean.iter().zip(&y.mean) {
            assert!((p - q).abs() < 1e-12);
        }
        for (p, q) in x.variance.iter().zip(&y.variance) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
