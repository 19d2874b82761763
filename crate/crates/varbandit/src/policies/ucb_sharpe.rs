//! UCB on the mean-to-variance ratio ("Sharpe-like" objective μ/σ²).
//!
//! The index of arm `i` at step `t` after `s_i` pulls is
//!
//! ```text
//! Index_i(t) = mean_i / var_i + sqrt(ln(4t²) / (c · s_i))
//! ```
//!
//! with `var_i` the unbiased variance estimate and `c > 0` a tuning
//! constant (default 1). The ratio needs at least two samples and a
//! non-degenerate variance, so initialization pulls every arm twice and a
//! degenerate arm gets an infinite index (forcing a re-pull).

use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, Policy, PolicyContext, PolicyError};
use crate::stats::RunningStats;

/// Optimism index on the mean-to-variance ratio; `+∞` until an arm has two
/// samples and a usable variance.
pub fn ucb_sharpe_index(stats: &RunningStats, t: u64, c: f64) -> f64 {
    if stats.count() < 2 {
        return f64::INFINITY;
    }
    let sharpe = match stats.empirical_sharpe() {
        Ok(s) => s,
        Err(_) => return f64::INFINITY,
    };
    let log_term = (4.0 * (t.max(1) as f64).powi(2)).ln();
    sharpe + (log_term / (c * stats.count() as f64)).sqrt()
}

/// Regret-minimizing policy over the mean-to-variance ratio.
#[derive(Debug, Clone)]
pub struct UcbSharpe {
    c: f64,
}

impl UcbSharpe {
    /// `c` scales the exploration bonus as `1/sqrt(c)`.
    pub fn new(c: f64) -> Result<Self, PolicyError> {
        if !c.is_finite() || c <= 0.0 {
            return Err(PolicyError::InvalidParameter(format!(
                "ucb_sharpe exploration constant must be positive and finite, got {c}"
            )));
        }
        Ok(Self { c })
    }
}

impl Policy for UcbSharpe {
    fn select(&mut self, ctx: &PolicyContext, _rng: &mut ChaCha8Rng) -> usize {
        if let Some(arm) = ctx.arms.iter().position(|s| s.count() < 2) {
            return arm;
        }
        argmax_lowest(ctx.arms.iter().map(|s| ucb_sharpe_index(s, ctx.t, self.c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    /// `count` samples (count even) with exactly the requested mean and
    /// unbiased variance, built from alternating two-point values.
    fn stats_with(count: u64, mean: f64, unbiased_variance: f64) -> RunningStats {
        assert!(count >= 2 && count.is_multiple_of(2));
        let d = (unbiased_variance * (count - 1) as f64 / count as f64).sqrt();
        let mut stats = RunningStats::new();
        for i in 0..count {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            stats.push(mean + sign * d).unwrap();
        }
        stats
    }

    #[test]
    fn index_matches_hand_computed_value() {
        // mean 1, variance 0.5 → ratio 2; bonus sqrt(ln(40000)/100).
        let stats = stats_with(100, 1.0, 0.5);
        let index = ucb_sharpe_index(&stats, 100, 1.0);
        assert_relative_eq!(index, 2.0 + 0.325_524_217, max_relative = 1e-6);
    }

    #[test]
    fn bonus_shrinks_with_count_and_scales_with_c() {
        let near = stats_with(10, 0.0, 1.0);
        let far = stats_with(100, 0.0, 1.0);
        assert!(ucb_sharpe_index(&near, 50, 1.0) > ucb_sharpe_index(&far, 50, 1.0));

        let stats = stats_with(10, 0.0, 1.0);
        let base = ucb_sharpe_index(&stats, 50, 1.0);
        let quartered = ucb_sharpe_index(&stats, 50, 4.0);
        assert_relative_eq!(base, 2.0 * quartered, max_relative = 1e-12);
    }

    #[test]
    fn undersampled_and_degenerate_arms_get_infinite_index() {
        let mut one = RunningStats::new();
        one.push(1.0).unwrap();
        assert_eq!(ucb_sharpe_index(&one, 10, 1.0), f64::INFINITY);

        let mut flat = RunningStats::new();
        flat.push(1.0).unwrap();
        flat.push(1.0).unwrap();
        assert_eq!(ucb_sharpe_index(&flat, 10, 1.0), f64::INFINITY);
    }

    #[test]
    fn initialization_pulls_each_arm_twice() {
        let mut policy = UcbSharpe::new(1.0).unwrap();
        let mut ctx = PolicyContext::new(3, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut trace = Vec::new();
        for step in 0..6 {
            let arm = policy.select(&ctx, &mut rng);
            trace.push(arm);
            // Distinct rewards so no arm is variance-degenerate afterwards.
            ctx.record(arm, step as f64 * 0.1);
        }
        assert_eq!(trace, vec![0, 0, 1, 1, 2, 2]);
        let next = policy.select(&ctx, &mut rng);
        assert!(next < 3);
    }

    #[test]
    fn prefers_the_higher_ratio_at_equal_counts() {
        let mut policy = UcbSharpe::new(1.0).unwrap();
        let mut ctx = PolicyContext::new(2, 100);
        // Arm 0: mean 1, variance 0.5 (ratio 2). Arm 1: mean 0.5, same
        // variance (ratio 1). Equal counts, so the bonus cancels.
        let a0 = stats_with(20, 1.0, 0.5);
        let a1 = stats_with(20, 0.5, 0.5);
        for i in 0..20 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let d = (0.5f64 * 19.0 / 20.0).sqrt();
            ctx.record(0, 1.0 + sign * d);
            ctx.record(1, 0.5 + sign * d);
        }
        assert!(ctx.arms[0].empirical_sharpe().unwrap() > ctx.arms[1].empirical_sharpe().unwrap());
        assert_relative_eq!(ctx.arms[0].mean(), a0.mean(), max_relative = 1e-12);
        assert_relative_eq!(ctx.arms[1].mean(), a1.mean(), max_relative = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(policy.select(&ctx, &mut rng), 0);
    }
}
