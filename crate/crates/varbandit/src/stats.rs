//! Streaming moment accumulation.
//!
//! Every policy in this crate scores arms through the same estimator state: a
//! [`RunningStats`] accumulator updated online with Welford's recurrence,
//!
//! ```text
//! count       <- count + 1
//! delta        = x - mean
//! mean        <- mean + delta / count
//! sum_sq_dev  <- sum_sq_dev + delta * (x - mean)
//! ```
//!
//! which avoids the catastrophic cancellation of the naive
//! `E[X^2] - E[X]^2` formula. From the accumulated state both the biased
//! (divide by `n`) and unbiased (divide by `n - 1`) variance estimators are
//! available; regret-style policies use the biased form while elimination and
//! recommendation rules use the unbiased form. The empirical Sharpe ratio
//! used by the Sharpe bandit is defined as `mean / unbiased_variance`
//! (variance, not standard deviation, in the denominator).

use thiserror::Error;

/// Variances at or below this floor are treated as degenerate when they
/// appear in a denominator (empirical Sharpe ratios).
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Errors from feeding or querying a [`RunningStats`] accumulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    /// The pushed sample was NaN or infinite.
    #[error("non-finite sample: {0}")]
    NonFiniteSample(f64),
    /// The requested statistic needs more samples than have been observed.
    #[error("statistic requires at least {required} samples, have {available}")]
    InsufficientSamples { required: u64, available: u64 },
    /// The empirical variance is at or below [`VARIANCE_FLOOR`], so a Sharpe
    /// ratio would divide by (numerically) zero.
    #[error("degenerate Sharpe ratio: variance {variance:e} is at or below the floor {floor:e}")]
    DegenerateSharpe { variance: f64, floor: f64 },
}

/// Online count / mean / centered-sum-of-squares accumulator.
///
/// ```
/// use varbandit::stats::RunningStats;
///
/// let mut stats = RunningStats::new();
/// for x in [1.0, 2.0, 3.0, 4.0] {
///     stats.push(x).unwrap();
/// }
/// assert_eq!(stats.mean(), 2.5);
/// assert!((stats.unbiased_variance().unwrap() - 5.0 / 3.0).abs() < 1e-15);
/// ```
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    sum_sq_dev: f64,
}

impl RunningStats {
    /// An empty accumulator.
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulator over the given samples.
    pub fn from_samples<I>(samples: I) -> Result<Self, StatsError>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut stats = Self::new();
        for x in samples {
            stats.push(x)?;
        }
        Ok(stats)
    }

    /// Number of samples observed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Sample mean; `0.0` for an empty accumulator.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Centered sum of squared deviations `Σ (x_i - mean)^2`.
    pub fn sum_sq_dev(&self) -> f64 {
        self.sum_sq_dev
    }

    /// Observe one sample. Rejects non-finite input; the accumulator is
    /// unchanged when an error is returned.
    pub fn push(&mut self, x: f64) -> Result<(), StatsError> {
        if !x.is_finite() {
            return Err(StatsError::NonFiniteSample(x));
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        let delta2 = x - self.mean;
        // `delta * delta2` is nonnegative in exact arithmetic; round-off can
        // drive the accumulated value slightly negative, so clamp at zero.
        self.sum_sq_dev = (self.sum_sq_dev + delta * delta2).max(0.0);
        Ok(())
    }

    /// Biased (maximum-likelihood) variance estimate `sum_sq_dev / n`.
    /// Requires at least one sample.
    pub fn biased_variance(&self) -> Result<f64, StatsError> {
        if self.count < 1 {
            return Err(StatsError::InsufficientSamples { required: 1, available: self.count });
        }
        Ok(self.sum_sq_dev / self.count as f64)
    }

    /// Unbiased sample variance `sum_sq_dev / (n - 1)`. Requires at least two
    /// samples.
    pub fn unbiased_variance(&self) -> Result<f64, StatsError> {
        if self.count < 2 {
            return Err(StatsError::InsufficientSamples { required: 2, available: self.count });
        }
        Ok(self.sum_sq_dev / (self.count - 1) as f64)
    }

    /// Empirical Sharpe ratio `mean / unbiased_variance` (note: variance in
    /// the denominator, not standard deviation). Requires at least two
    /// samples and a variance above [`VARIANCE_FLOOR`].
    pub fn empirical_sharpe(&self) -> Result<f64, StatsError> {
        let variance = self.unbiased_variance()?;
        if variance <= VARIANCE_FLOOR {
            return Err(StatsError::DegenerateSharpe { variance, floor: VARIANCE_FLOOR });
        }
        Ok(self.mean / variance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent two-pass reference: mean in one pass, centered moments in
    /// a second pass.
    fn two_pass(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let ssd = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
        (mean, ssd)
    }

    #[test]
    fn zero_one_pair_has_known_variances() {
        let stats = RunningStats::from_samples([0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(stats.biased_variance().unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(stats.unbiased_variance().unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn one_to_four_has_known_moments() {
        let stats = RunningStats::from_samples([1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(stats.mean(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(stats.unbiased_variance().unwrap(), 5.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_two_pass_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<f64> = (0..257).map(|_| rng.random_range(-3.0..9.0)).collect();
        let (mean, ssd) = two_pass(&samples);
        let stats = RunningStats::from_samples(samples.iter().copied()).unwrap();
        assert_relative_eq!(stats.mean(), mean, max_relative = 1e-12);
        let n = samples.len() as f64;
        assert_relative_eq!(stats.biased_variance().unwrap(), ssd / n, max_relative = 1e-12);
        assert_relative_eq!(
            stats.unbiased_variance().unwrap(),
            ssd / (n - 1.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn matches_two_pass_reference_with_large_offset() {
        // A large common offset is the classic trigger for catastrophic
        // cancellation in the E[X^2] - E[X]^2 formula.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..1024).map(|_| 1.0e9 + rng.random::<f64>()).collect();
        let (_, ssd) = two_pass(&samples);
        let stats = RunningStats::from_samples(samples.iter().copied()).unwrap();
        let n = samples.len() as f64;
        assert_relative_eq!(
            stats.unbiased_variance().unwrap(),
            ssd / (n - 1.0),
            max_relative = 1e-6
        );
        // The estimate must stay close to the true variance of U(0,1).
        assert_abs_diff_eq!(stats.unbiased_variance().unwrap(), 1.0 / 12.0, epsilon = 5e-3);
    }

    #[test]
    fn sharpe_of_one_three_is_one() {
        // mean 2, unbiased variance 2.
        let stats = RunningStats::from_samples([1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(stats.empirical_sharpe().unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_sequence_is_degenerate_for_sharpe() {
        let stats = RunningStats::from_samples([0.7, 0.7, 0.7]).unwrap();
        assert_eq!(stats.biased_variance().unwrap(), 0.0);
        assert!(matches!(stats.empirical_sharpe(), Err(StatsError::DegenerateSharpe { .. })));
    }

    #[test]
    fn insufficient_samples_are_reported() {
        let empty = RunningStats::new();
        assert_eq!(
            empty.biased_variance(),
            Err(StatsError::InsufficientSamples { required: 1, available: 0 })
        );
        let one = RunningStats::from_samples([2.0]).unwrap();
        assert_eq!(one.biased_variance().unwrap(), 0.0);
        assert_eq!(
            one.unbiased_variance(),
            Err(StatsError::InsufficientSamples { required: 2, available: 1 })
        );
        assert_eq!(
            one.empirical_sharpe(),
            Err(StatsError::InsufficientSamples { required: 2, available: 1 })
        );
    }

    #[test]
    fn non_finite_samples_are_rejected_without_corruption() {
        let mut stats = RunningStats::from_samples([1.0, 2.0]).unwrap();
        let before = stats;
        assert!(matches!(stats.push(f64::NAN), Err(StatsError::NonFiniteSample(_))));
        assert!(matches!(stats.push(f64::INFINITY), Err(StatsError::NonFiniteSample(_))));
        assert_eq!(stats, before);
    }

    proptest! {
        #[test]
        fn variance_is_nonnegative_and_estimators_are_consistent(
            samples in proptest::collection::vec(-1.0e6f64..1.0e6, 2..200)
        ) {
            let stats = RunningStats::from_samples(samples.iter().copied()).unwrap();
            let n = stats.count() as f64;
            let biased = stats.biased_variance().unwrap();
            let unbiased = stats.unbiased_variance().unwrap();
            prop_assert!(biased >= 0.0);
            prop_assert!(unbiased >= 0.0);
            // biased = unbiased * (n - 1) / n
            prop_assert!((biased - unbiased * (n - 1.0) / n).abs() <= 1e-9 * (1.0 + unbiased));
        }

        #[test]
        fn order_of_samples_does_not_matter(
            samples in proptest::collection::vec(-100.0f64..100.0, 2..64)
        ) {
            let forward = RunningStats::from_samples(samples.iter().copied()).unwrap();
            let reversed = RunningStats::from_samples(samples.iter().rev().copied()).unwrap();
            prop_assert!((forward.mean() - reversed.mean()).abs() <= 1e-9 * (1.0 + forward.mean().abs()));
            let fv = forward.unbiased_variance().unwrap();
            let rv = reversed.unbiased_variance().unwrap();
            prop_assert!((fv - rv).abs() <= 1e-9 * (1.0 + fv.abs()));
        }
    }
}
