//! SHVV: sequential halving on the unbiased variance (fixed budget).
//!
//! The pull budget `n` is split evenly across `ceil(log2(K))` rounds. In
//! round `r` with surviving set `A_r`, every surviving arm is pulled
//!
//! ```text
//! t_r = floor(n / (|A_r| * ceil(log2 K)))
//! ```
//!
//! times, after which only the `ceil(|A_r| / 2)` arms with the largest
//! unbiased variance *over that round's samples* survive. Eliminated arms
//! are never pulled again. After the last round a single arm remains and is
//! recommended.
//!
//! For a 16-arm run with budget 2000 the schedule is:
//!
//! ```text
//! round  |A_r|  t_r   pulls
//!   0     16    31     496
//!   1      8    62     496
//!   2      4   125     500
//!   3      2   250     500
//!                     ----
//!                     1992  <= 2000
//! ```
//!
//! Two variations are exposed:
//!
//! * `cumulative_elimination` ranks arms on all samples collected so far
//!   rather than the current round only (an ablation of the restart rule);
//! * `stop_at` halts the halving once at most that many arms survive (the
//!   trading case study shortlists 8 stocks this way), returning the unused
//!   budget.

use rand_chacha::ChaCha8Rng;

use super::{Policy, PolicyContext, PolicyError};
use crate::stats::RunningStats;

/// One round of the sequential-halving schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShvvRound {
    /// Round number, starting at 0.
    pub round: usize,
    /// Number of arms still active in this round.
    pub active_count: usize,
    /// Pulls allocated to each active arm in this round.
    pub pulls_per_arm: u64,
}

fn ceil_log2(k: usize) -> u32 {
    usize::BITS - (k - 1).leading_zeros()
}

/// The full halving schedule for `k` arms and pull budget `n`.
///
/// Errors when the budget cannot give every arm at least one pull in every
/// round, i.e. when `n < k * ceil(log2 k)`.
pub fn shvv_schedule(k: usize, n: u64) -> Result<Vec<ShvvRound>, PolicyError> {
    if k < 2 {
        return Err(PolicyError::InvalidParameter(format!(
            "sequential halving needs at least 2 arms, got {k}"
        )));
    }
    let rounds = ceil_log2(k) as u64;
    let required = k as u64 * rounds;
    if n < required {
        return Err(PolicyError::InfeasibleBudget { arms: k, budget: n, required });
    }
    let mut schedule = Vec::with_capacity(rounds as usize);
    let mut active = k;
    for round in 0..rounds as usize {
        schedule.push(ShvvRound {
            round,
            active_count: active,
            pulls_per_arm: n / (active as u64 * rounds),
        });
        active = active.div_ceil(2);
    }
    debug_assert_eq!(active, 1);
    debug_assert!(
        schedule.iter().map(|r| r.active_count as u64 * r.pulls_per_arm).sum::<u64>() <= n
    );
    Ok(schedule)
}

/// Sequential halving over arm variances.
#[derive(Debug, Clone)]
pub struct Shvv {
    schedule: Vec<ShvvRound>,
    stop_at: usize,
    cumulative: bool,
    /// Surviving arm ids, ascending.
    active: Vec<usize>,
    round: usize,
    pulls_in_round: u64,
    /// Per active arm (parallel to `active`), this round's samples only.
    round_stats: Vec<RunningStats>,
    /// Per arm id, all samples (for the cumulative-elimination variant).
    cumulative_stats: Vec<RunningStats>,
    finished: bool,
}

impl Shvv {
    /// Build the policy for `num_arms` arms and pull budget `horizon`,
    /// stopping once at most `stop_at` arms survive (1 for full
    /// identification).
    pub fn new(
        num_arms: usize,
        horizon: u64,
        stop_at: usize,
        cumulative_elimination: bool,
    ) -> Result<Self, PolicyError> {
        if stop_at < 1 || stop_at >= num_arms {
            return Err(PolicyError::InvalidParameter(format!(
                "stop_at must lie in [1, num_arms), got {stop_at} for {num_arms} arms"
            )));
        }
        let schedule = shvv_schedule(num_arms, horizon)?;
        Ok(Self {
            schedule,
            stop_at,
            cumulative: cumulative_elimination,
            active: (0..num_arms).collect(),
            round: 0,
            pulls_in_round: 0,
            round_stats: vec![RunningStats::new(); num_arms],
            cumulative_stats: vec![RunningStats::new(); num_arms],
            finished: false,
        })
    }

    /// The halving schedule this run follows.
    pub fn schedule(&self) -> &[ShvvRound] {
        &self.schedule
    }

    /// Currently surviving arm ids, ascending.
    pub fn survivors(&self) -> &[usize] {
        &self.active
    }

    /// Variance score used for elimination ranking. Rounds that allocate a
    /// single pull per arm carry no variance signal; such arms score zero
    /// and survival falls back to the lowest-index rule.
    fn score(stats: &RunningStats) -> f64 {
        stats.unbiased_variance().unwrap_or(0.0)
    }

    fn eliminate(&mut self) {
        let scores: Vec<f64> = self
            .active
            .iter()
            .enumerate()
            .map(|(pos, &arm)| {
                if self.cumulative {
                    Self::score(&self.cumulative_stats[arm])
                } else {
                    Self::score(&self.round_stats[pos])
                }
            })
            .collect();
        let keep = self.active.len().div_ceil(2).max(self.stop_at.min(self.active.len()));
        let mut order: Vec<usize> = (0..self.active.len()).collect();
        // Stable sort: among equal scores the earlier (lower-id) arm wins.
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("scores are finite"));
        let mut survivors: Vec<usize> = order[..keep].iter().map(|&pos| self.active[pos]).collect();
        survivors.sort_unstable();
        self.active = survivors;
        self.round += 1;
        self.pulls_in_round = 0;
        if self.active.len() <= self.stop_at || self.round >= self.schedule.len() {
            self.finished = true;
        } else {
            self.round_stats = vec![RunningStats::new(); self.active.len()];
        }
    }
}

impl Policy for Shvv {
    fn select(&mut self, _ctx: &PolicyContext, _rng: &mut ChaCha8Rng) -> usize {
        debug_assert!(!self.finished, "select called after the schedule completed");
        self.active[(self.pulls_in_round % self.active.len() as u64) as usize]
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<(), PolicyError> {
        let pos = self
            .active
            .iter()
            .position(|&a| a == arm)
            .expect("observed reward for an eliminated arm");
        self.round_stats[pos].push(reward).map_err(|e| PolicyError::EnvironmentMismatch {
            policy: "shvv",
            expected: "finite",
            reward: match e {
                crate::stats::StatsError::NonFiniteSample(x) => x,
                _ => reward,
            },
        })?;
        self.cumulative_stats[arm].push(reward).expect("already validated");
        self.pulls_in_round += 1;
        let round_budget = self.active.len() as u64 * self.schedule[self.round].pulls_per_arm;
        if self.pulls_in_round >= round_budget {
            self.eliminate();
        }
        Ok(())
    }

    fn done(&self) -> bool {
        self.finished
    }

    fn recommend(&self, _ctx: &PolicyContext) -> Option<usize> {
        Some(self.active[0])
    }
}
