//! Baseline policies: ε-greedy on the variance, uniform allocation for
//! identification, and classic mean-targeting UCB1.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, Policy, PolicyContext, PolicyError};
use crate::stats::RunningStats;

/// ε-greedy exploiting the arm with the largest biased variance.
///
/// A round-robin bootstrap pulls every arm once. Afterwards each step draws
/// the ε coin first and, only on the explore branch, a uniform arm — so a
/// greedy step consumes exactly one RNG draw.
#[derive(Debug, Clone)]
pub struct EpsilonGreedyV {
    epsilon: f64,
}

impl EpsilonGreedyV {
    pub fn new(epsilon: f64) -> Result<Self, PolicyError> {
        if !epsilon.is_finite() || !(0.0..=1.0).contains(&epsilon) {
            return Err(PolicyError::InvalidParameter(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }
}

impl Policy for EpsilonGreedyV {
    fn select(&mut self, ctx: &PolicyContext, rng: &mut ChaCha8Rng) -> usize {
        if let Some(arm) = ctx.arms.iter().position(|s| s.count() == 0) {
            return arm;
        }
        if rng.random::<f64>() < self.epsilon {
            return rng.random_range(0..ctx.num_arms());
        }
        argmax_lowest(ctx.arms.iter().map(|s| s.biased_variance().expect("count >= 1")))
    }
}

/// Uniform round-robin allocation; recommends the arm with the largest
/// unbiased variance at the end of the budget.
#[derive(Debug, Clone, Default)]
pub struct UniformBai;

impl UniformBai {
    pub fn new() -> Self {
        Self
    }
}

impl Policy for UniformBai {
    fn select(&mut self, ctx: &PolicyContext, _rng: &mut ChaCha8Rng) -> usize {
        ((ctx.t - 1) % ctx.num_arms() as u64) as usize
    }

    fn recommend(&self, ctx: &PolicyContext) -> Option<usize> {
        Some(argmax_lowest(
            ctx.arms.iter().map(|s| s.unbiased_variance().unwrap_or(f64::NEG_INFINITY)),
        ))
    }
}

/// Classic UCB1 index `mean + sqrt(2·ln t / s)`; `+∞` for unpulled arms. The
/// step count here is the number of *completed* pulls.
pub fn ucb1_index(stats: &RunningStats, t: u64) -> f64 {
    if stats.count() == 0 {
        return f64::INFINITY;
    }
    stats.mean() + (2.0 * (t.max(1) as f64).ln() / stats.count() as f64).sqrt()
}

/// Mean-targeting UCB1.
#[derive(Debug, Clone, Default)]
pub struct Ucb1;

impl Ucb1 {
    pub fn new() -> Self {
        Self
    }
}

impl Policy for Ucb1 {
    fn select(&mut self, ctx: &PolicyContext, _rng: &mut ChaCha8Rng) -> usize {
        argmax_lowest(ctx.arms.iter().map(|s| ucb1_index(s, ctx.t.saturating_sub(1))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn epsilon_one_explores_uniformly() {
        let mut policy = EpsilonGreedyV::new(1.0).unwrap();
        let k = 5;
        let mut ctx = PolicyContext::new(k, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Run the bootstrap first so every later step is a coin flip.
        for _ in 0..k {
            let arm = policy.select(&ctx, &mut rng);
            ctx.record(arm, 0.0);
        }
        let steps = 100_000u64;
        let mut counts = vec![0u64; k];
        for _ in 0..steps {
            let arm = policy.select(&ctx, &mut rng);
            counts[arm] += 1;
            ctx.record(arm, 0.0);
        }
        let expected = steps as f64 / k as f64;
        let three_se = 3.0 * (steps as f64 * (1.0 / k as f64) * (1.0 - 1.0 / k as f64)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - expected).abs() <= three_se,
                "count {c} outside {expected} ± {three_se}"
            );
        }
    }

    #[test]
    fn epsilon_zero_is_pure_greedy_on_the_variance() {
        let mut policy = EpsilonGreedyV::new(0.0).unwrap();
        let mut ctx = PolicyContext::new(3, 100);
        ctx.record(0, 0.5);
        ctx.record(1, 0.5);
        ctx.record(2, 0.0);
        ctx.record(2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Arm 2 has variance 0.25; the others 0.
        for _ in 0..10 {
            let arm = policy.select(&ctx, &mut rng);
            assert_eq!(arm, 2);
            ctx.record(arm, if ctx.t.is_multiple_of(2) { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn epsilon_outside_unit_interval_is_rejected() {
        assert!(EpsilonGreedyV::new(-0.1).is_err());
        assert!(EpsilonGreedyV::new(1.5).is_err());
        assert!(EpsilonGreedyV::new(f64::NAN).is_err());
    }

    #[test]
    fn uniform_splits_the_budget_evenly() {
        let mut policy = UniformBai::new();
        let (k, n) = (5usize, 103u64);
        let mut ctx = PolicyContext::new(k, n);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = vec![0u64; k];
        for step in 0..n {
            let arm = policy.select(&ctx, &mut rng);
            counts[arm] += 1;
            ctx.record(arm, (step % 3) as f64);
        }
        assert_eq!(counts, vec![21, 21, 21, 20, 20]);
    }

    #[test]
    fn uniform_recommends_the_largest_unbiased_variance() {
        let policy = UniformBai::new();
        let mut ctx = PolicyContext::new(3, 12);
        for i in 0..4 {
            ctx.record(0, 0.5);
            ctx.record(1, if i % 2 == 0 { 0.0 } else { 1.0 });
            ctx.record(2, 0.5 + 0.1 * (i % 2) as f64);
        }
        assert_eq!(policy.recommend(&ctx), Some(1));
    }

    #[test]
    fn ucb1_index_matches_hand_computed_value() {
        let mut stats = RunningStats::new();
        for i in 0..10 {
            stats.push((i % 2) as f64).unwrap();
        }
        // 0.5 + sqrt(2·ln 100 / 10)
        assert_relative_eq!(ucb1_index(&stats, 100), 1.459_705, max_relative = 1e-5);
        assert_eq!(ucb1_index(&RunningStats::new(), 100), f64::INFINITY);
        // The bonus washes out as the count grows.
        let mut heavy = RunningStats::new();
        for i in 0..1_000_000u64 {
            heavy.push((i % 2) as f64).unwrap();
        }
        assert!((ucb1_index(&heavy, 1_000_000) - 0.5).abs() < 0.01);
    }

    #[test]
    fn higher_mean_wins_at_equal_counts() {
        let mut policy = Ucb1::new();
        let mut ctx = PolicyContext::new(2, 100);
        for _ in 0..10 {
            ctx.record(0, 0.2);
            ctx.record(1, 0.8);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(policy.select(&ctx, &mut rng), 1);
    }

    #[test]
    fn ucb1_locks_onto_the_better_bernoulli_arm() {
        let (p0, p1) = (0.9, 0.1);
        let n = 5000u64;
        let reps = 100;
        let mut total_best = 0u64;
        for rep in 0..reps {
            let mut env_rng = ChaCha8Rng::seed_from_u64(1000 + rep);
            let mut policy = Ucb1::new();
            let mut ctx = PolicyContext::new(2, n);
            let mut policy_rng = ChaCha8Rng::seed_from_u64(rep);
            for _ in 0..n {
                let arm = policy.select(&ctx, &mut policy_rng);
                let p = if arm == 0 { p0 } else { p1 };
                let reward = if env_rng.random::<f64>() < p { 1.0 } else { 0.0 };
                if arm == 0 {
                    total_best += 1;
                }
                ctx.record(arm, reward);
            }
        }
        let share = total_best as f64 / (n * reps) as f64;
        assert!(share >= 0.95, "best arm pulled only {share:.3} of the time");
    }
}
