//! Closed-form tail and regret bounds, with Monte Carlo oracles to check
//! them against.
//!
//! The closed-form evaluators are pure functions of a problem description.
//! Probability bounds are returned as a [`BoundValue`]: the raw formula
//! value clamped to `[0, 1]`, with a `vacuous` flag set whenever clamping
//! kicked in or the feasibility precondition failed — several of these
//! bounds only become informative at budgets far beyond the scales the
//! accompanying experiments run at, and consumers need to see that rather
//! than a silent `1.0`.
//!
//! The Monte Carlo oracles ([`empirical_tail_probability`],
//! [`empirical_sharpe_tail_probability`]) estimate the same tail events by
//! replication with per-replication derived seeds. Replications are sharded
//! across threads; the estimate aggregates by summing exceedance counts, so
//! it is independent of thread count and scheduling order.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::env::DistributionSpec;
use crate::seed;
use crate::stats::RunningStats;

/// Default leading constant of the sub-Gaussian variance tail bound. The
/// constant is not pinned down by the theory; every automated check
/// involving it is shape-based (decay rates), never absolute.
pub const DEFAULT_SUBGAUSS_C: f64 = 0.125;
/// Default leading constant of the Sharpe concentration/regret bounds; same
/// caveat as [`DEFAULT_SUBGAUSS_C`].
pub const DEFAULT_SHARPE_C: f64 = 0.125;

/// Errors from bound evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    /// A scalar argument is outside its legal range.
    #[error("invalid bound parameter: {0}")]
    InvalidParameter(String),
    /// The problem instance violates a structural precondition.
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),
}

/// A gap-based problem description shared by the regret and error bounds.
///
/// `gaps[i]` is the shortfall of arm `i`'s target quantity (variance, or
/// Sharpe ratio for the Sharpe bounds) below the best arm's; the unique
/// optimal arm has gap 0. A diverging bound from a zero suboptimal gap is
/// unrepresentable: construction rejects more than one zero gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    gaps: Vec<f64>,
    support: Option<(f64, f64)>,
    subgauss_v2: Option<f64>,
    horizon: u64,
}

impl ProblemInstance {
    /// Build and validate an instance from per-arm gaps.
    pub fn new(
        gaps: Vec<f64>,
        support: Option<(f64, f64)>,
        subgauss_v2: Option<f64>,
        horizon: u64,
    ) -> Result<Self, BoundError> {
        if gaps.is_empty() {
            return Err(BoundError::InvalidInstance("need at least one arm".into()));
        }
        if horizon == 0 {
            return Err(BoundError::InvalidInstance("horizon must be at least 1".into()));
        }
        for (arm, &gap) in gaps.iter().enumerate() {
            if !gap.is_finite() || gap < 0.0 {
                return Err(BoundError::InvalidInstance(format!(
                    "gap of arm {arm} must be finite and nonnegative, got {gap}"
                )));
            }
        }
        let zeros = gaps.iter().filter(|&&g| g == 0.0).count();
        if zeros != 1 {
            return Err(BoundError::InvalidInstance(format!(
                "exactly one arm must have gap 0 (unique optimum), found {zeros}"
            )));
        }
        if let Some((l, u)) = support {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(BoundError::InvalidInstance(format!(
                    "support must satisfy l < u with finite endpoints, got ({l}, {u})"
                )));
            }
        }
        if let Some(v2) = subgauss_v2 {
            if !v2.is_finite() || v2 <= 0.0 {
                return Err(BoundError::InvalidInstance(format!(
                    "sub-Gaussian proxy must be positive and finite, got {v2}"
                )));
            }
        }
        Ok(Self { gaps, support, subgauss_v2, horizon })
    }

    /// Build an instance from per-arm target values (e.g. true variances):
    /// gaps are shortfalls below the unique maximum.
    pub fn from_values(
        values: &[f64],
        support: Option<(f64, f64)>,
        subgauss_v2: Option<f64>,
        horizon: u64,
    ) -> Result<Self, BoundError> {
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !best.is_finite() {
            return Err(BoundError::InvalidInstance(
                "per-arm values must be finite and non-empty".into(),
            ));
        }
        Self::new(values.iter().map(|v| best - v).collect(), support, subgauss_v2, horizon)
    }

    pub fn num_arms(&self) -> usize {
        self.gaps.len()
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    pub fn subgauss_v2(&self) -> Option<f64> {
        self.subgauss_v2
    }

    fn suboptimal_gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.gaps.iter().copied().filter(|&g| g > 0.0)
    }
}

/// A probability bound clamped to `[0, 1]`; `vacuous` marks values that
/// carry no information (formula at or above 1, or precondition infeasible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    /// The uninformative bound: probability 1.
    pub const VACUOUS: BoundValue = BoundValue { value: 1.0, vacuous: true };

    fn from_raw(raw: f64) -> Self {
        if raw >= 1.0 {
            Self::VACUOUS
        } else {
            Self { value: raw.max(0.0), vacuous: false }
        }
    }
}

fn check_positive(name: &str, value: f64) -> Result<(), BoundError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(BoundError::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Tail bound on the deviation of the empirical variance of `n` samples
/// bounded in `[l, u]`: `2·exp(−2nε²/(u−l)²)`.
pub fn variance_concentration_bound(
    n: u64,
    eps: f64,
    l: f64,
    u: f64,
) -> Result<BoundValue, BoundError> {
    if n < 2 {
        return Err(BoundError::InvalidParameter(format!(
            "variance concentration needs n >= 2, got {n}"
        )));
    }
    check_positive("eps", eps)?;
    if !(l.is_finite() && u.is_finite() && l < u) {
        return Err(BoundError::InvalidParameter(format!(
            "support must satisfy l < u, got ({l}, {u})"
        )));
    }
    let width = u - l;
    Ok(BoundValue::from_raw(2.0 * (-2.0 * n as f64 * eps * eps / (width * width)).exp()))
}

/// Expected-regret bound for the variance-UCB policy on rewards supported
/// on `[0, 1]`:
///
/// ```text
/// 8 · Σ_{i: δ_i > 0} ln(n)/δ_i  +  (1 + π²/3) · Σ_{i: δ_i > 0} δ_i
/// ```
pub fn ucb_vv_regret_bound(instance: &ProblemInstance) -> Result<f64, BoundError> {
    match instance.support() {
        Some((l, u)) if l == 0.0 && u == 1.0 => {}
        other => {
            return Err(BoundError::InvalidInstance(format!(
                "the variance-UCB regret bound is stated for rewards supported on (0, 1), got {other:?}"
            )))
        }
    }
    let log_n = (instance.horizon() as f64).ln();
    let log_term: f64 = instance.suboptimal_gaps().map(|g| log_n / g).sum();
    let gap_sum: f64 = instance.suboptimal_gaps().sum();
    Ok(8.0 * log_term + (1.0 + PI * PI / 3.0) * gap_sum)
}

/// Problem complexity for sequential halving: sort the suboptimal gaps
/// ascending, give the `j`-th smallest rank `j + 2`, and take
/// `max_j rank_j / δ_(j)²`.
pub fn complexity_h2(instance: &ProblemInstance) -> Result<f64, BoundError> {
    let mut subopt: Vec<f64> = instance.suboptimal_gaps().collect();
    if subopt.is_empty() {
        return Err(BoundError::InvalidInstance(
            "complexity needs at least one suboptimal arm".into(),
        ));
    }
    subopt.sort_by(|a, b| a.partial_cmp(b).expect("gaps are finite"));
    Ok(subopt
        .iter()
        .enumerate()
        .map(|(j, &gap)| (j + 2) as f64 / (gap * gap))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Error bound for one halving round `r` (0-based): with `i_r = K/2^{r+2}`
/// and the gap at rank `i_r`,
///
/// ```text
/// 3 · exp(−(n − 4·i_r·log₂K)²·δ² / (8·n·i_r·log₂K))
/// ```
///
/// Budgets at or below the feasibility threshold `4·i_r·log₂K` give the
/// vacuous bound.
pub fn shvv_round_error_bound(
    k: usize,
    n: u64,
    r: u32,
    gap_at_ir: f64,
) -> Result<BoundValue, BoundError> {
    if k < 2 {
        return Err(BoundError::InvalidParameter(format!("need at least 2 arms, got {k}")));
    }
    check_positive("gap", gap_at_ir)?;
    let log2k = (k as f64).log2();
    let i_r = k as f64 / 2f64.powi(r as i32 + 2);
    let threshold = 4.0 * i_r * log2k;
    if n as f64 <= threshold {
        return Ok(BoundValue::VACUOUS);
    }
    let numerator = (n as f64 - threshold).powi(2) * gap_at_ir * gap_at_ir;
    let denominator = 8.0 * n as f64 * i_r * log2k;
    Ok(BoundValue::from_raw(3.0 * (-numerator / denominator).exp()))
}

/// Identification-error bound for sequential halving over the whole budget,
/// in terms of the instance's complexity `H₂`:
///
/// ```text
/// 3·log₂K · exp(−(n − K·log₂K)² / (8·n·log₂K·H₂))
/// ```
pub fn shvv_error_bound(instance: &ProblemInstance) -> Result<BoundValue, BoundError> {
    let h2 = complexity_h2(instance)?;
    shvv_error_bound_from_h2(instance.num_arms(), instance.horizon(), h2)
}

/// [`shvv_error_bound`] with the complexity supplied directly.
pub fn shvv_error_bound_from_h2(k: usize, n: u64, h2: f64) -> Result<BoundValue, BoundError> {
    if k < 2 {
        return Err(BoundError::InvalidParameter(format!("need at least 2 arms, got {k}")));
    }
    check_positive("h2", h2)?;
    let log2k = (k as f64).log2();
    if n as f64 <= k as f64 * log2k {
        return Ok(BoundValue::VACUOUS);
    }
    let exponent = (n as f64 - k as f64 * log2k).powi(2) / (8.0 * n as f64 * log2k * h2);
    Ok(BoundValue::from_raw(3.0 * log2k * (-exponent).exp()))
}

/// Variance tail bound for `v²`-sub-Gaussian samples:
/// `4·exp(−C·n·min(ε²/v⁴, ε/v²))`.
pub fn subgauss_variance_bound(
    n: u64,
    eps: f64,
    v2: f64,
    big_c: f64,
) -> Result<BoundValue, BoundError> {
    if n < 1 {
        return Err(BoundError::InvalidParameter("needs n >= 1".into()));
    }
    check_positive("eps", eps)?;
    check_positive("v2", v2)?;
    check_positive("C", big_c)?;
    let rate = (eps * eps / (v2 * v2)).min(eps / v2);
    Ok(BoundValue::from_raw(4.0 * (-big_c * n as f64 * rate).exp()))
}

/// Tail bound on the empirical Sharpe ratio: `4·exp(−c·n·min(η², η))`.
pub fn sharpe_concentration_bound(n: u64, eta: f64, c: f64) -> Result<BoundValue, BoundError> {
    if n < 1 {
        return Err(BoundError::InvalidParameter("needs n >= 1".into()));
    }
    check_positive("eta", eta)?;
    check_positive("c", c)?;
    let rate = (eta * eta).min(eta);
    Ok(BoundValue::from_raw(4.0 * (-c * n as f64 * rate).exp()))
}

/// Which written form of the Sharpe regret bound to evaluate. The two forms
/// disagree (see the doc of [`ucb_sharpe_regret_bound`]); both are exposed
/// rather than silently picking one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SharpeBoundForm {
    /// `Σ 9·ln(n) / (c·Δ_i)` — the headline statement.
    Statement,
    /// `Σ 9·ln(4n²) / (c·Δ_i)` — what the per-arm pull-count derivation
    /// `s_i(n) ≤ 9·ln(4n²)/(c·Δ_i²)` actually yields after multiplying by
    /// the gap.
    Proof,
}

/// Leading (logarithmic) term of the Sharpe-UCB regret bound over the
/// instance's Sharpe gaps. The additive `O(1)` term is not included; report
/// layers may add a configurable constant.
pub fn ucb_sharpe_regret_bound(
    instance: &ProblemInstance,
    c: f64,
    form: SharpeBoundForm,
) -> Result<f64, BoundError> {
    check_positive("c", c)?;
    let n = instance.horizon() as f64;
    let log_factor = match form {
        SharpeBoundForm::Statement => n.ln(),
        SharpeBoundForm::Proof => (4.0 * n * n).ln(),
    };
    Ok(instance.suboptimal_gaps().map(|gap| 9.0 * log_factor / (c * gap)).sum())
}

/// A Monte Carlo tail estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    /// Fraction of replications whose deviation exceeded the threshold.
    pub probability: f64,
    /// Binomial standard error `sqrt(p(1−p)/reps)`.
    pub standard_error: f64,
    /// Number of replications behind the estimate.
    pub replications: u64,
}

fn tail_estimate_over<F>(replications: u64, exceeds: F) -> TailEstimate
where
    F: Fn(u64) -> bool + Sync,
{
    let exceed_count: u64 =
        (0..replications).into_par_iter().map(|rep| u64::from(exceeds(rep))).sum();
    let p = exceed_count as f64 / replications as f64;
    TailEstimate {
        probability: p,
        standard_error: (p * (1.0 - p) / replications as f64).sqrt(),
        replications,
    }
}

fn check_tail_args(
    spec: &DistributionSpec,
    n: u64,
    threshold: f64,
    replications: u64,
) -> Result<(), BoundError> {
    spec.validate().map_err(|e| BoundError::InvalidParameter(e.to_string()))?;
    if n < 2 {
        return Err(BoundError::InvalidParameter(format!(
            "variance estimation needs n >= 2 samples, got {n}"
        )));
    }
    check_positive("deviation threshold", threshold)?;
    if replications < 1000 {
        return Err(BoundError::InvalidParameter(format!(
            "tail estimation needs at least 1000 replications for a usable standard error, got {replications}"
        )));
    }
    Ok(())
}

/// Monte Carlo probability that the unbiased variance of `n` i.i.d. draws
/// deviates from the true variance by more than `eps`. Each replication
/// runs on its own derived seed; the result is independent of thread count.
pub fn empirical_tail_probability(
    spec: &DistributionSpec,
    n: u64,
    eps: f64,
    replications: u64,
    base_seed: u64,
) -> Result<TailEstimate, BoundError> {
    check_tail_args(spec, n, eps, replications)?;
    let true_variance = spec.true_variance();
    Ok(tail_estimate_over(replications, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::tail_seed(base_seed, rep));
        let mut stats = RunningStats::new();
        for _ in 0..n {
            stats.push(spec.sample(&mut rng)).expect("distributions sample finite values");
        }
        let estimate = stats.unbiased_variance().expect("n >= 2");
        (estimate - true_variance).abs() > eps
    }))
}

/// Monte Carlo probability that the empirical Sharpe ratio (mean over
/// unbiased variance) of `n` i.i.d. draws deviates from the true ratio by
/// more than `eta`. A replication with a degenerate sample variance counts
/// as an exceedance.
pub fn empirical_sharpe_tail_probability(
    spec: &DistributionSpec,
    n: u64,
    eta: f64,
    replications: u64,
    base_seed: u64,
) -> Result<TailEstimate, BoundError> {
    check_tail_args(spec, n, eta, replications)?;
    let true_sharpe = spec.true_sharpe().ok_or_else(|| {
        BoundError::InvalidParameter(
            "the Sharpe ratio is undefined for a zero-variance distribution".into(),
        )
    })?;
    Ok(tail_estimate_over(replications, |rep| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::tail_seed(base_seed, rep));
        let mut stats = RunningStats::new();
        for _ in 0..n {
            stats.push(spec.sample(&mut rng)).expect("distributions sample finite values");
        }
        match stats.empirical_sharpe() {
            Ok(s) => (s - true_sharpe).abs() > eta,
            Err(_) => true,
        }
    }))
}
