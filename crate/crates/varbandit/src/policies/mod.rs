//! Sequential decision rules.
//!
//! All policies share one interface: at step `t` the runner asks the policy
//! to [`Policy::select`] an arm given the shared [`PolicyContext`] (step
//! counter, horizon, and per-arm [`RunningStats`] over the rewards each arm
//! has produced), then samples the environment, records the reward into the
//! context, and finally calls [`Policy::observe`] so stateful policies can
//! update private bookkeeping. Fixed-budget identification policies signal
//! completion through [`Policy::done`] and answer [`Policy::recommend`] at
//! the end of the budget.
//!
//! Determinism rules shared by every policy:
//!
//! * all ties (argmax, elimination ranking) break toward the lowest arm
//!   index;
//! * randomized policies draw only from the RNG passed to `select`, so a
//!   fixed seed plus a fixed reward tape replays the identical action
//!   sequence bit for bit.

mod baselines;
mod klucb;
mod shvv;
mod ucb_sharpe;
mod ucb_vv;
mod vts;

pub use baselines::{ucb1_index, EpsilonGreedyV, Ucb1, UniformBai};
pub use klucb::{kl_bernoulli, klucb_upper, KlUcbBernoulli};
pub use shvv::{shvv_schedule, Shvv, ShvvRound};
pub use ucb_sharpe::{ucb_sharpe_index, UcbSharpe};
pub use ucb_vv::{ucb_vv_index, UcbVv};
pub use vts::{vts_select, NigPrior, Vts};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::RunningStats;

/// Errors raised by policy construction or updates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    /// A policy parameter is outside its legal range.
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
    /// The pull budget cannot cover the policy's schedule.
    #[error("budget {budget} is infeasible for {arms} arms: need at least {required} pulls")]
    InfeasibleBudget { arms: usize, budget: u64, required: u64 },
    /// The observed reward is outside the family the policy supports.
    #[error("{policy} expects {expected} rewards, observed {reward}")]
    EnvironmentMismatch { policy: &'static str, expected: &'static str, reward: f64 },
}

/// Shared decision state owned by the experiment runner.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    /// 1-based index of the *next* decision step.
    pub t: u64,
    /// Total number of pulls the run will make.
    pub horizon: u64,
    /// Per-arm reward statistics, cumulative over the run.
    pub arms: Vec<RunningStats>,
}

impl PolicyContext {
    /// Fresh context for `num_arms` arms and the given pull budget.
    pub fn new(num_arms: usize, horizon: u64) -> Self {
        Self { t: 1, horizon, arms: vec![RunningStats::new(); num_arms] }
    }

    /// Number of arms.
    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Record the reward of a completed pull and advance the step counter.
    pub fn record(&mut self, arm: usize, reward: f64) {
        self.arms[arm].push(reward).expect("environments produce finite rewards");
        self.t += 1;
    }
}

/// A sequential decision rule.
pub trait Policy: Send {
    /// Choose the arm to pull at the context's current step. May draw from
    /// `rng`; deterministic policies ignore it.
    fn select(&mut self, ctx: &PolicyContext, rng: &mut ChaCha8Rng) -> usize;

    /// Observe the reward of the pull just made. The runner has already
    /// recorded it into the context; only policies with private bookkeeping
    /// (round statistics, reward-family checks) need to override this.
    fn observe(&mut self, _arm: usize, _reward: f64) -> Result<(), PolicyError> {
        Ok(())
    }

    /// Whether the policy has exhausted its own schedule (fixed-budget
    /// identification policies only; regret policies never finish early).
    fn done(&self) -> bool {
        false
    }

    /// Final recommendation for best-arm identification policies; `None` for
    /// regret policies.
    fn recommend(&self, _ctx: &PolicyContext) -> Option<usize> {
        None
    }
}

/// Index of the largest value, lowest index winning ties.
pub(crate) fn argmax_lowest<I>(values: I) -> usize
where
    I: IntoIterator<Item = f64>,
{
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (idx, value) in values.into_iter().enumerate() {
        if value > best {
            best = value;
            best_idx = idx;
        }
    }
    best_idx
}

fn default_sharpe_scale() -> f64 {
    1.0
}

/// Declarative policy description, as written in experiment config files.
///
/// Each variant carries the policy's tunable parameters; omitted parameters
/// take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyDescriptor {
    /// UCB on the biased variance estimate with a round-robin pilot phase.
    UcbVv {
        /// Pilot fraction `S_P`; the pilot lasts `floor(S_P * horizon)`
        /// steps. Default: one round-robin pass (`S_P = K / horizon`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pilot_fraction: Option<f64>,
    },
    /// Sequential halving on the unbiased round variance (fixed budget).
    Shvv {
        /// Rank arms by cumulative rather than per-round statistics.
        #[serde(default)]
        cumulative_elimination: bool,
        /// Stop halving once this many arms survive (default 1).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stop_at: Option<usize>,
    },
    /// UCB on the empirical Sharpe ratio.
    UcbSharpe {
        /// Exploration scale `c` in the bonus `sqrt(ln(4 t^2) / (c s))`.
        #[serde(default = "default_sharpe_scale")]
        c: f64,
    },
    /// ε-greedy exploiting the arm with the largest biased variance.
    EpsilonGreedyV { epsilon: f64 },
    /// Thompson sampling on the variance marginal of a per-arm
    /// Normal–Inverse-Gamma posterior.
    Vts {
        #[serde(default)]
        prior: NigPrior,
    },
    /// KL-UCB for Bernoulli rewards (mean-targeting baseline).
    KlUcbBernoulli,
    /// Uniform round-robin allocation recommending the largest unbiased
    /// variance (fixed-budget baseline).
    UniformBai,
    /// Classic UCB1 on the mean (mean-targeting baseline).
    Ucb1,
}

impl PolicyDescriptor {
    /// Stable label used in CSV output and seed derivation documentation.
    pub fn label(&self) -> String {
        match self {
            PolicyDescriptor::UcbVv { pilot_fraction: None } => "ucb_vv".into(),
            PolicyDescriptor::UcbVv { pilot_fraction: Some(f) } => format!("ucb_vv_sp{f}"),
            PolicyDescriptor::Shvv { cumulative_elimination: false, stop_at: None } => {
                "shvv".into()
            }
            PolicyDescriptor::Shvv { cumulative_elimination, stop_at } => {
                let mut label = String::from("shvv");
                if *cumulative_elimination {
                    label.push_str("_cumulative");
                }
                if let Some(m) = stop_at {
                    label.push_str(&format!("_stop{m}"));
                }
                label
            }
            PolicyDescriptor::UcbSharpe { c } => format!("ucb_sharpe_c{c}"),
            PolicyDescriptor::EpsilonGreedyV { epsilon } => format!("epsilon_greedy_{epsilon}"),
            PolicyDescriptor::Vts { .. } => "vts".into(),
            PolicyDescriptor::KlUcbBernoulli => "kl_ucb".into(),
            PolicyDescriptor::UniformBai => "uniform".into(),
            PolicyDescriptor::Ucb1 => "ucb1".into(),
        }
    }

    /// Whether this is a fixed-budget identification policy (only those may
    /// run in identification experiments, and they may not run in regret
    /// experiments).
    pub fn is_bai(&self) -> bool {
        matches!(self, PolicyDescriptor::Shvv { .. } | PolicyDescriptor::UniformBai)
    }

    /// Whether the policy only accepts Bernoulli rewards.
    pub fn requires_bernoulli(&self) -> bool {
        matches!(self, PolicyDescriptor::KlUcbBernoulli)
    }

    /// Validate parameters and build the policy for a `num_arms`-armed run
    /// of `horizon` total pulls.
    pub fn build(&self, num_arms: usize, horizon: u64) -> Result<Box<dyn Policy>, PolicyError> {
        if num_arms == 0 {
            return Err(PolicyError::InvalidParameter("need at least one arm".into()));
        }
        match self {
            PolicyDescriptor::UcbVv { pilot_fraction } => {
                if let Some(f) = pilot_fraction {
                    if !f.is_finite() || *f < 0.0 || *f > 1.0 {
                        return Err(PolicyError::InvalidParameter(format!(
                            "pilot fraction must lie in [0, 1], got {f}"
                        )));
                    }
                }
                Ok(Box::new(UcbVv::new(*pilot_fraction)))
            }
            PolicyDescriptor::Shvv { cumulative_elimination, stop_at } => {
                let stop = stop_at.unwrap_or(1);
                Ok(Box::new(Shvv::new(num_arms, horizon, stop, *cumulative_elimination)?))
            }
            PolicyDescriptor::UcbSharpe { c } => Ok(Box::new(UcbSharpe::new(*c)?)),
            PolicyDescriptor::EpsilonGreedyV { epsilon } => {
                Ok(Box::new(EpsilonGreedyV::new(*epsilon)?))
            }
            PolicyDescriptor::Vts { prior } => {
                prior.validate()?;
                Ok(Box::new(Vts::new(*prior)))
            }
            PolicyDescriptor::KlUcbBernoulli => Ok(Box::new(KlUcbBernoulli::new())),
            PolicyDescriptor::UniformBai => Ok(Box::new(UniformBai::new())),
            PolicyDescriptor::Ucb1 => Ok(Box::new(Ucb1::new())),
        }
    }
}
