//! Thompson sampling on the variance marginal of a Normal–Inverse-Gamma
//! posterior ("VTS").
//!
//! Each arm carries a conjugate NIG prior over its (mean, variance). After
//! `n` rewards with sample mean `x̄` and sum of squared deviations `S`, the
//! variance marginal is Inverse-Gamma with
//!
//! ```text
//! α_n = α₀ + n/2
//! β_n = β₀ + S/2 + κ₀·n·(x̄ − μ₀)² / (2·(κ₀ + n))
//! ```
//!
//! Each step draws one variance sample per arm from its posterior and plays
//! the arm with the largest draw. A two-pull round-robin bootstrap gives
//! every arm a defined sample variance before posterior sampling starts.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{argmax_lowest, Policy, PolicyContext, PolicyError};
use crate::stats::RunningStats;

/// Normal–Inverse-Gamma prior hyperparameters, shared by every arm.
///
/// The default is weakly informative: `μ₀ = 0.5`, `κ₀ = 1`, `α₀ = 2`,
/// `β₀ = 0.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NigPrior {
    /// Prior mean location.
    pub mu0: f64,
    /// Prior pseudo-count on the mean.
    pub kappa0: f64,
    /// Inverse-Gamma shape on the variance.
    pub alpha0: f64,
    /// Inverse-Gamma scale on the variance.
    pub beta0: f64,
}

impl Default for NigPrior {
    fn default() -> Self {
        Self { mu0: 0.5, kappa0: 1.0, alpha0: 2.0, beta0: 0.1 }
    }
}

impl NigPrior {
    /// Check the hyperparameters define a proper prior.
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !self.mu0.is_finite() {
            return Err(PolicyError::InvalidParameter(format!(
                "prior mean must be finite, got {}",
                self.mu0
            )));
        }
        for (name, value) in
            [("kappa0", self.kappa0), ("alpha0", self.alpha0), ("beta0", self.beta0)]
        {
            if !value.is_finite() || value <= 0.0 {
                return Err(PolicyError::InvalidParameter(format!(
                    "prior {name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Posterior Inverse-Gamma parameters `(α_n, β_n)` of the variance
    /// marginal given one arm's reward statistics.
    pub fn posterior(&self, stats: &RunningStats) -> (f64, f64) {
        let n = stats.count() as f64;
        let alpha = self.alpha0 + n / 2.0;
        let centering =
            self.kappa0 * n * (stats.mean() - self.mu0).powi(2) / (2.0 * (self.kappa0 + n));
        let beta = self.beta0 + stats.sum_sq_dev() / 2.0 + centering;
        (alpha, beta)
    }

    /// One Inverse-Gamma draw from the variance posterior.
    fn sample_variance(&self, stats: &RunningStats, rng: &mut ChaCha8Rng) -> f64 {
        let (alpha, beta) = self.posterior(stats);
        let gamma =
            Gamma::new(alpha, 1.0 / beta).expect("validated prior gives positive shape/scale");
        1.0 / gamma.sample(rng)
    }
}

/// One posterior variance draw per arm; plays the arm with the largest
/// sampled variance (lowest index on ties). The prior must be
/// [`NigPrior::validate`]d.
pub fn vts_select(ctx: &PolicyContext, prior: &NigPrior, rng: &mut ChaCha8Rng) -> usize {
    argmax_lowest(ctx.arms.iter().map(|s| prior.sample_variance(s, rng)))
}

/// Variance-targeting Thompson sampling.
#[derive(Debug, Clone)]
pub struct Vts {
    prior: NigPrior,
}

impl Vts {
    /// The prior must already be validated (see [`NigPrior::validate`]).
    pub fn new(prior: NigPrior) -> Self {
        Self { prior }
    }
}

impl Policy for Vts {
    fn select(&mut self, ctx: &PolicyContext, rng: &mut ChaCha8Rng) -> usize {
        if let Some(arm) = ctx.arms.iter().position(|s| s.count() < 2) {
            return arm;
        }
        vts_select(ctx, &self.prior, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn default_prior_is_weakly_informative_and_validates() {
        let prior = NigPrior::default();
        assert_eq!((prior.mu0, prior.kappa0, prior.alpha0, prior.beta0), (0.5, 1.0, 2.0, 0.1));
        prior.validate().unwrap();
        assert!(NigPrior { kappa0: 0.0, ..NigPrior::default() }.validate().is_err());
        assert!(NigPrior { alpha0: -1.0, ..NigPrior::default() }.validate().is_err());
        assert!(NigPrior { beta0: f64::NAN, ..NigPrior::default() }.validate().is_err());
        assert!(NigPrior { mu0: f64::INFINITY, ..NigPrior::default() }.validate().is_err());
    }

    #[test]
    fn partial_json_fills_in_defaults() {
        let prior: NigPrior = serde_json::from_str(r#"{"mu0": 0.0}"#).unwrap();
        assert_eq!(prior, NigPrior { mu0: 0.0, ..NigPrior::default() });
        assert!(serde_json::from_str::<NigPrior>(r#"{"mu9": 0.0}"#).is_err());
    }

    #[test]
    fn posterior_matches_hand_computed_update() {
        let stats = RunningStats::from_samples([1.0, 2.0, 3.0, 4.0]).unwrap();
        // n=4, x̄=2.5, S=5: α = 2 + 2 = 4,
        // β = 0.1 + 2.5 + 1·4·(2.5−0.5)²/(2·5) = 0.1 + 2.5 + 1.6 = 4.2.
        let (alpha, beta) = NigPrior::default().posterior(&stats);
        assert_relative_eq!(alpha, 4.0, max_relative = 1e-12);
        assert_relative_eq!(beta, 4.2, max_relative = 1e-12);

        // No data: the posterior is the prior.
        let (alpha, beta) = NigPrior::default().posterior(&RunningStats::new());
        assert_relative_eq!(alpha, 2.0, max_relative = 1e-12);
        assert_relative_eq!(beta, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn sampler_mean_tracks_the_posterior_mean() {
        // Inverse-Gamma(α, β) has mean β/(α−1); with α=4, β=4.2 that is 1.4.
        let stats = RunningStats::from_samples([1.0, 2.0, 3.0, 4.0]).unwrap();
        let prior = NigPrior::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 200_000;
        let mean: f64 =
            (0..draws).map(|_| prior.sample_variance(&stats, &mut rng)).sum::<f64>() / draws as f64;
        assert_relative_eq!(mean, 1.4, max_relative = 0.02);
    }

    #[test]
    fn prior_only_draws_select_each_arm_uniformly() {
        let ctx = PolicyContext::new(4, 1);
        let prior = NigPrior::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000u64;
        let mut counts = [0u64; 4];
        for _ in 0..draws {
            counts[vts_select(&ctx, &prior, &mut rng)] += 1;
        }
        // Binomial(1e5, 1/4): three standard errors ≈ 411.
        let expected = draws as f64 / 4.0;
        let three_se = 3.0 * (draws as f64 * 0.25 * 0.75).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - expected).abs() <= three_se,
                "count {c} outside {expected} ± {three_se}"
            );
        }
    }

    #[test]
    fn posterior_concentrates_on_the_high_variance_arm() {
        let mut ctx = PolicyContext::new(2, 1);
        // Arm 0: 1e4 samples alternating 0/1 (variance 0.25);
        // arm 1: 1e4 samples alternating 0.4/0.6 (variance 0.01).
        for i in 0..10_000 {
            let flip = (i % 2) as f64;
            ctx.record(0, flip);
            ctx.record(1, 0.4 + 0.2 * flip);
        }
        let prior = NigPrior::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wins = (0..1000).filter(|_| vts_select(&ctx, &prior, &mut rng) == 0).count();
        assert!(wins >= 990, "high-variance arm chosen only {wins}/1000 times");
    }

    #[test]
    fn policy_bootstraps_each_arm_twice_before_sampling() {
        let mut policy = Vts::new(NigPrior::default());
        let mut ctx = PolicyContext::new(3, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut trace = Vec::new();
        for step in 0..6 {
            let arm = policy.select(&ctx, &mut rng);
            trace.push(arm);
            ctx.record(arm, step as f64 * 0.3);
        }
        assert_eq!(trace, vec![0, 0, 1, 1, 2, 2]);
        assert!(policy.select(&ctx, &mut rng) < 3);
    }
}
