//! Seeded, replicated experiment execution.
//!
//! Four experiment kinds share one execution discipline:
//!
//! * **regret** — run every configured policy against a fixed set of reward
//!   distributions, score pulls by true variance gaps;
//! * **bai** — fixed-budget best-variance-arm identification, reporting
//!   error rates with binomial standard errors;
//! * **bound_sweep** — Monte Carlo tail probabilities next to their
//!   closed-form bounds over an `(n, deviation)` grid;
//! * **case_study** — the two-stage option-trading pipeline on simulated
//!   markets.
//!
//! Reproducibility contract: a configuration (including its base seed)
//! fully determines every result byte. Replications run in parallel, but
//! each replication derives its own seeds (see [`crate::seed`]) and the
//! aggregation folds replications in index order, so the worker count
//! cannot change any output. Within one replication every policy sees the
//! identical reward tape per (arm, pull index): environment streams are
//! seeded per (replication, arm), never per policy.

mod bai;
mod case_study;
mod config;
mod output;
mod regret;
mod setups;
mod sweep;

pub use bai::{run_bai_experiment, BaiOutcome, BaiTable};
pub use case_study::{run_case_study, CaseStudyOutcome, MarketRun, StockReward, TradingReport};
pub use config::{
    ArmSource, BaiConfig, BoundSweepConfig, CaseStudyConfig, ExperimentSpec, GbmRanges,
    RegretConfig, TailBoundKind,
};
pub use output::{
    atomic_write, config_hash, log_spaced_points, write_experiment_outputs, OutputFiles,
};
pub use regret::{run_regret_experiment, RegretOutcome, RegretSummary};
pub use setups::build_bai_setup;
pub use sweep::{run_bound_sweep, BoundSweepOutcome, SweepRow};

use serde::Serialize;
use thiserror::Error;

use crate::bounds::BoundError;
use crate::env::EnvError;
use crate::policies::PolicyError;

/// Errors from experiment configuration or execution. The three variants
/// map onto the process exit codes of the command-line front end (bad
/// config, infeasible budget, I/O failure).
#[derive(Debug, Error)]
pub enum HarnessError {
    /// The configuration violates an invariant (unknown fields are caught
    /// earlier, at parse time).
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    /// The pull budget cannot cover a configured policy's schedule.
    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),
    /// Reading or writing results failed.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl From<PolicyError> for HarnessError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::InfeasibleBudget { .. } => HarnessError::InfeasibleBudget(e.to_string()),
            other => HarnessError::InvalidConfig(other.to_string()),
        }
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        HarnessError::InvalidConfig(e.to_string())
    }
}

impl From<BoundError> for HarnessError {
    fn from(e: BoundError) -> Self {
        HarnessError::InvalidConfig(e.to_string())
    }
}

/// Everything recorded about a single replication.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub replication_id: u64,
    /// Arm chosen at each executed step.
    pub chosen_arms: Vec<u32>,
    /// Final pull count per arm; sums to the number of executed steps
    /// (identification policies may stop before the nominal budget).
    pub final_pull_counts: Vec<u64>,
    /// Cumulative regret after each step (regret experiments).
    pub regret_trace: Option<Vec<f64>>,
    /// Recommended arm (identification experiments).
    pub recommendation: Option<usize>,
    /// Whether the recommendation hit the true optimum.
    pub correct: Option<bool>,
    /// Cumulative net profit after each trading step (case study).
    pub profit_trace: Option<Vec<f64>>,
    /// Total premium paid on executed trades (case study).
    pub premium_total: Option<f64>,
}

impl RunRecord {
    fn new(replication_id: u64, num_arms: usize) -> Self {
        Self {
            replication_id,
            chosen_arms: Vec::new(),
            final_pull_counts: vec![0; num_arms],
            regret_trace: None,
            recommendation: None,
            correct: None,
            profit_trace: None,
            premium_total: None,
        }
    }
}

/// One aggregated point of a time-indexed curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// Environment variable consulted for the default worker count when the
/// config does not set one.
pub const THREADS_ENV_VAR: &str = "VARBANDIT_THREADS";

/// Worker count resolution: explicit config value, else the
/// `VARBANDIT_THREADS` environment variable, else one worker per core.
pub(crate) fn resolve_threads(config_threads: Option<usize>) -> usize {
    if let Some(t) = config_threads {
        return t;
    }
    std::env::var(THREADS_ENV_VAR).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0)
}

/// Build a dedicated rayon pool with the resolved worker count (0 = one per
/// core) and run `f` inside it.
pub(crate) fn with_pool<T: Send>(
    config_threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(config_threads))
        .build()
        .map_err(|e| HarnessError::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Mean and standard error of a sample.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Error rate of a boolean sample with its binomial standard error.
pub(crate) fn error_rate_and_stderr(correct: &[bool]) -> (f64, f64) {
    let n = correct.len() as f64;
    if correct.is_empty() {
        return (0.0, 0.0);
    }
    let errors = correct.iter().filter(|&&c| !c).count() as f64;
    let p = errors / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_resolution_prefers_the_config_value() {
        assert_eq!(resolve_threads(Some(3)), 3);
        // Without a config value the env var (or default 0) decides; we only
        // assert it does not panic and yields a usable count.
        let _ = resolve_threads(None);
    }

    #[test]
    fn mean_and_stderr_match_hand_computed_values() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_and_stderr(&[]), (0.0, 0.0));
        assert_eq!(mean_and_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn error_rate_counts_incorrect_recommendations() {
        let (p, se) = error_rate_and_stderr(&[true, false, true, false]);
        assert!((p - 0.5).abs() < 1e-12);
        assert!((se - 0.25).abs() < 1e-12);
        assert_eq!(error_rate_and_stderr(&[true, true]).0, 0.0);
    }
}
