//! KL-UCB for Bernoulli rewards (mean-targeting baseline).
//!
//! The upper confidence bound of an arm with empirical mean `p̂` after `s`
//! pulls at step `t` is the largest `q ∈ [p̂, 1]` with
//!
//! ```text
//! s · kl(p̂, q) ≤ ln t
//! ```
//!
//! where `kl` is the Bernoulli Kullback–Leibler divergence. The bound is
//! found by bisection to an absolute tolerance of 1e-9; the policy plays the
//! arm with the largest bound. Rewards must be exactly 0 or 1.

use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, Policy, PolicyContext, PolicyError};

const BISECTION_TOLERANCE: f64 = 1e-9;

/// Bernoulli KL divergence `kl(p, q)` with the conventions `0·ln 0 = 0` and
/// `kl = +∞` when `q` puts zero mass where `p` does not.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
    if p == q {
        return 0.0;
    }
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Largest `q ∈ [p_hat, 1]` with `count · kl(p_hat, q) ≤ ln t`, by bisection.
pub fn klucb_upper(p_hat: f64, count: u64, t: u64) -> f64 {
    debug_assert!(count >= 1, "the bound needs at least one sample");
    if p_hat >= 1.0 {
        return 1.0;
    }
    let budget = (t.max(1) as f64).ln() / count as f64;
    if budget <= 0.0 {
        return p_hat;
    }
    let (mut lo, mut hi) = (p_hat, 1.0);
    // kl(p̂, ·) is increasing on [p̂, 1] and +∞ at 1, so the invariant
    // kl(lo) ≤ budget < kl(hi) holds throughout.
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if kl_bernoulli(p_hat, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// KL-UCB index policy over Bernoulli arms.
#[derive(Debug, Clone, Default)]
pub struct KlUcbBernoulli;

impl KlUcbBernoulli {
    pub fn new() -> Self {
        Self
    }
}

impl Policy for KlUcbBernoulli {
    fn select(&mut self, ctx: &PolicyContext, _rng: &mut ChaCha8Rng) -> usize {
        if let Some(arm) = ctx.arms.iter().position(|s| s.count() == 0) {
            return arm;
        }
        argmax_lowest(ctx.arms.iter().map(|s| klucb_upper(s.mean(), s.count(), ctx.t)))
    }

    fn observe(&mut self, _arm: usize, reward: f64) -> Result<(), PolicyError> {
        if reward != 0.0 && reward != 1.0 {
            return Err(PolicyError::EnvironmentMismatch {
                policy: "kl_ucb",
                expected: "Bernoulli {0, 1}",
                reward,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn divergence_matches_hand_computed_values() {
        assert_eq!(kl_bernoulli(0.5, 0.5), 0.0);
        assert_eq!(kl_bernoulli(0.0, 0.0), 0.0);
        assert_eq!(kl_bernoulli(1.0, 1.0), 0.0);
        // 0.5·ln(2/3) + 0.5·ln(2)
        assert_relative_eq!(kl_bernoulli(0.5, 0.75), 0.143_841, max_relative = 1e-5);
        assert_relative_eq!(kl_bernoulli(0.0, 0.5), 2.0f64.ln(), max_relative = 1e-12);
        assert_eq!(kl_bernoulli(0.5, 1.0), f64::INFINITY);
        assert_eq!(kl_bernoulli(0.5, 0.0), f64::INFINITY);
    }

    #[test]
    fn upper_bound_is_tight_and_feasible() {
        let (p_hat, count, t) = (0.3, 10, 100);
        let q = klucb_upper(p_hat, count, t);
        let budget = (t as f64).ln() / count as f64;
        assert!(q >= p_hat && q < 1.0);
        assert!(kl_bernoulli(p_hat, q) <= budget);
        // Maximality: nudging past the bisection tolerance breaks the budget.
        assert!(kl_bernoulli(p_hat, q + 1e-6) > budget);
    }

    #[test]
    fn upper_bound_edges() {
        assert_eq!(klucb_upper(1.0, 5, 100), 1.0);
        // ln 1 = 0 exploration budget collapses the bound onto the mean.
        assert_eq!(klucb_upper(0.4, 5, 1), 0.4);
        // p̂ = 0 still explores.
        let q = klucb_upper(0.0, 10, 100);
        assert!(q > 0.0 && q < 1.0);
    }

    #[test]
    fn more_samples_tighten_the_bound() {
        let loose = klucb_upper(0.3, 5, 1000);
        let tight = klucb_upper(0.3, 500, 1000);
        assert!(tight < loose);
        assert!(tight - 0.3 < 0.1);
    }

    #[test]
    fn bootstrap_then_highest_bound_wins() {
        let mut policy = KlUcbBernoulli::new();
        let mut ctx = PolicyContext::new(2, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(policy.select(&ctx, &mut rng), 0);
        ctx.record(0, 0.0);
        assert_eq!(policy.select(&ctx, &mut rng), 1);
        ctx.record(1, 1.0);
        // Arm 1 has the higher mean, hence the higher bound.
        assert_eq!(policy.select(&ctx, &mut rng), 1);
    }

    #[test]
    fn non_binary_rewards_are_rejected() {
        let mut policy = KlUcbBernoulli::new();
        policy.observe(0, 1.0).unwrap();
        policy.observe(0, 0.0).unwrap();
        let err = policy.observe(0, 0.5).unwrap_err();
        assert!(matches!(err, PolicyError::EnvironmentMismatch { reward, .. } if reward == 0.5));
    }
}
