//! Reward environments.
//!
//! Two kinds of environment feed the policies in this crate:
//!
//! * Parametric arm distributions ([`DistributionSpec`]) with closed-form
//!   means and variances, so experiment runners can compute exact variance
//!   gaps (and hence exact regret) from pull counts alone.
//! * A simulated market: per-stock geometric Brownian motion price paths
//!   ([`GbmSpec`]) observed through a rolling window of simple daily returns
//!   ([`MarketState`]), traded via one-step at-the-money call options
//!   ([`OptionTerms`]).
//!
//! All sampling goes through caller-supplied RNGs; nothing here owns a seed.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::stats::RunningStats;

/// Errors from environment construction or queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    /// A distribution or market parameter is outside its legal range.
    #[error("invalid environment parameter: {0}")]
    InvalidParameter(String),
    /// A stock index is out of range.
    #[error("unknown stock {stock}, market has {num_stocks} stocks")]
    UnknownStock { stock: usize, num_stocks: usize },
    /// A rolling-window query needs more price history than exists.
    #[error("insufficient price history for stock {stock}: have {prices} prices, need at least 2")]
    InsufficientHistory { stock: usize, prices: usize },
}

/// A parametric reward distribution with known moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Uniform on `[lower, upper)`.
    Uniform { lower: f64, upper: f64 },
    /// Bernoulli with success probability `p`, rewards in `{0, 1}`.
    Bernoulli { p: f64 },
    /// Gaussian with the given mean and standard deviation.
    Gaussian { mean: f64, std_dev: f64 },
}

impl DistributionSpec {
    /// Check parameter ranges: `lower < upper`, `p ∈ [0, 1]`, `std_dev > 0`,
    /// everything finite.
    pub fn validate(&self) -> Result<(), EnvError> {
        match *self {
            DistributionSpec::Uniform { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() || lower >= upper {
                    return Err(EnvError::InvalidParameter(format!(
                        "uniform requires finite lower < upper, got [{lower}, {upper})"
                    )));
                }
            }
            DistributionSpec::Bernoulli { p } => {
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(EnvError::InvalidParameter(format!(
                        "bernoulli requires p in [0, 1], got {p}"
                    )));
                }
            }
            DistributionSpec::Gaussian { mean, std_dev } => {
                if !mean.is_finite() || !std_dev.is_finite() || std_dev <= 0.0 {
                    return Err(EnvError::InvalidParameter(format!(
                        "gaussian requires finite mean and std_dev > 0, got ({mean}, {std_dev})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact mean.
    pub fn true_mean(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { lower, upper } => 0.5 * (lower + upper),
            DistributionSpec::Bernoulli { p } => p,
            DistributionSpec::Gaussian { mean, .. } => mean,
        }
    }

    /// Exact variance: `(upper-lower)^2 / 12`, `p(1-p)`, or `std_dev^2`.
    pub fn true_variance(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { lower, upper } => {
                let width = upper - lower;
                width * width / 12.0
            }
            DistributionSpec::Bernoulli { p } => p * (1.0 - p),
            DistributionSpec::Gaussian { std_dev, .. } => std_dev * std_dev,
        }
    }

    /// Exact Sharpe ratio `mean / variance`; `None` when the variance is zero.
    pub fn true_sharpe(&self) -> Option<f64> {
        let variance = self.true_variance();
        if variance > 0.0 {
            Some(self.true_mean() / variance)
        } else {
            None
        }
    }

    /// Support `[lower, upper]` for bounded distributions, `None` for
    /// Gaussian.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            DistributionSpec::Uniform { lower, upper } => Some((lower, upper)),
            DistributionSpec::Bernoulli { .. } => Some((0.0, 1.0)),
            DistributionSpec::Gaussian { .. } => None,
        }
    }

    /// Sub-Gaussian variance proxy, where one is available in closed form
    /// (the variance itself for Gaussians).
    pub fn subgauss_v2(&self) -> Option<f64> {
        match *self {
            DistributionSpec::Gaussian { std_dev, .. } => Some(std_dev * std_dev),
            _ => None,
        }
    }

    /// Draw one sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistributionSpec::Uniform { lower, upper } => rng.random_range(lower..upper),
            DistributionSpec::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Gaussian { mean, std_dev } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std_dev * z
            }
        }
    }
}

/// Geometric Brownian motion parameters for one stock.
///
/// `drift` and `vol` are in per-year units, `dt` is the step length in years
/// (one trading day, `1/252`, by default), and the step uses the exact
/// log-normal discretization, so no discretization error accumulates:
///
/// ```text
/// S_t = S_{t-1} * exp((drift - vol^2 / 2) * dt + vol * sqrt(dt) * z)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmSpec {
    /// Initial price, `> 0`.
    pub s0: f64,
    /// Annualized drift.
    pub drift: f64,
    /// Annualized volatility, `> 0`.
    pub vol: f64,
    /// Step length in years, `> 0`.
    pub dt: f64,
}

/// One trading day as a fraction of a 252-day year.
pub const TRADING_DAY: f64 = 1.0 / 252.0;

impl GbmSpec {
    /// Check `s0 > 0`, `vol > 0`, `dt > 0`, everything finite.
    pub fn validate(&self) -> Result<(), EnvError> {
        let ok = self.s0.is_finite()
            && self.drift.is_finite()
            && self.vol.is_finite()
            && self.dt.is_finite()
            && self.s0 > 0.0
            && self.vol > 0.0
            && self.dt > 0.0;
        if ok {
            Ok(())
        } else {
            Err(EnvError::InvalidParameter(format!("invalid GBM parameters: {self:?}")))
        }
    }

    /// Advance one step from `s_prev` using the standard normal draw `z`.
    pub fn step(&self, s_prev: f64, z: f64) -> f64 {
        let drift_term = (self.drift - 0.5 * self.vol * self.vol) * self.dt;
        let vol_term = self.vol * self.dt.sqrt();
        s_prev * (drift_term + vol_term * z).exp()
    }

    /// Mean of the per-step log increment.
    pub fn log_increment_mean(&self) -> f64 {
        (self.drift - 0.5 * self.vol * self.vol) * self.dt
    }

    /// Variance of the per-step log increment.
    pub fn log_increment_variance(&self) -> f64 {
        self.vol * self.vol * self.dt
    }
}

/// How the option strike is set when a stock is selected for trading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrikeRule {
    /// Strike at the previous close (an at-the-money one-step option).
    #[default]
    AtTheMoney,
}

/// How the option premium is set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum PremiumRule {
    /// Black–Scholes price of the one-step call at zero interest, with
    /// volatility estimated from the stock's rolling return window.
    #[default]
    BlackScholes,
    /// A fixed premium per contract (useful for stress tests).
    Fixed { amount: f64 },
}

/// Contract terms for the one-step call options traded in the case study.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionTerms {
    pub strike: StrikeRule,
    pub premium: PremiumRule,
}

impl OptionTerms {
    /// Strike for an option written when the stock last closed at
    /// `prev_close`.
    pub fn strike(&self, prev_close: f64) -> f64 {
        match self.strike {
            StrikeRule::AtTheMoney => prev_close,
        }
    }

    /// Premium for the option: `daily_vol` is the sample standard deviation
    /// of the stock's windowed daily returns and `dt` the step length in
    /// years. Always nonnegative.
    pub fn premium(&self, prev_close: f64, strike: f64, daily_vol: f64, dt: f64) -> f64 {
        match self.premium {
            PremiumRule::BlackScholes => {
                // The window estimates per-step volatility; annualize so that
                // sigma * sqrt(dt) reproduces the per-step value.
                let sigma_annual = daily_vol / dt.sqrt();
                black_scholes_call(prev_close, strike, sigma_annual, dt)
            }
            PremiumRule::Fixed { amount } => amount.max(0.0),
        }
    }

    /// Payoff of an executed contract: intrinsic value minus premium. The
    /// trading loop only executes when `s_t > strike`, but the formula is
    /// total either way.
    pub fn payoff(&self, s_t: f64, strike: f64, premium: f64) -> f64 {
        (s_t - strike).max(0.0) - premium
    }
}

/// Black–Scholes price of a European call at zero interest rate.
///
/// Degenerate inputs (zero volatility or maturity) collapse to intrinsic
/// value, which keeps the premium well defined for constant price windows.
pub fn black_scholes_call(spot: f64, strike: f64, sigma: f64, maturity: f64) -> f64 {
    if spot <= 0.0 || strike <= 0.0 {
        return (spot - strike).max(0.0);
    }
    let sig_sqrt_t = sigma * maturity.sqrt();
    if sig_sqrt_t <= 0.0 || !sig_sqrt_t.is_finite() {
        return (spot - strike).max(0.0);
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let d1 = ((spot / strike).ln() + 0.5 * sig_sqrt_t * sig_sqrt_t) / sig_sqrt_t;
    let d2 = d1 - sig_sqrt_t;
    spot * normal.cdf(d1) - strike * normal.cdf(d2)
}

#[derive(Debug, Clone)]
struct StockSeries {
    prices: Vec<f64>,
    returns: VecDeque<f64>,
}

/// Price and rolling-return state for a universe of stocks.
///
/// Each stock advances on its own clock: pushing a price appends the implied
/// simple return `(p_t - p_{t-1}) / p_{t-1}` to that stock's window, which
/// retains the most recent `window` returns. Full price histories are kept
/// for audit export.
#[derive(Debug, Clone)]
pub struct MarketState {
    window: usize,
    stocks: Vec<StockSeries>,
}

impl MarketState {
    /// Start a market from initial prices. The rolling window must hold at
    /// least 2 returns and all prices must be positive.
    pub fn new(window: usize, initial_prices: &[f64]) -> Result<Self, EnvError> {
        if window < 2 {
            return Err(EnvError::InvalidParameter(format!(
                "rolling window must be at least 2, got {window}"
            )));
        }
        if initial_prices.is_empty() {
            return Err(EnvError::InvalidParameter("market needs at least one stock".into()));
        }
        for (i, &p) in initial_prices.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(EnvError::InvalidParameter(format!(
                    "initial price of stock {i} must be positive and finite, got {p}"
                )));
            }
        }
        Ok(Self {
            window,
            stocks: initial_prices
                .iter()
                .map(|&p| StockSeries { prices: vec![p], returns: VecDeque::new() })
                .collect(),
        })
    }

    /// Rolling window length.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of stocks.
    pub fn num_stocks(&self) -> usize {
        self.stocks.len()
    }

    fn series(&self, stock: usize) -> Result<&StockSeries, EnvError> {
        self.stocks
            .get(stock)
            .ok_or(EnvError::UnknownStock { stock, num_stocks: self.stocks.len() })
    }

    /// Append a new closing price for `stock`, extending its return window.
    /// Returns the implied simple return.
    pub fn push_price(&mut self, stock: usize, price: f64) -> Result<f64, EnvError> {
        let window = self.window;
        let num_stocks = self.stocks.len();
        let series =
            self.stocks.get_mut(stock).ok_or(EnvError::UnknownStock { stock, num_stocks })?;
        if !price.is_finite() || price <= 0.0 {
            return Err(EnvError::InvalidParameter(format!(
                "price of stock {stock} must be positive and finite, got {price}"
            )));
        }
        let prev = *series.prices.last().expect("series always holds at least one price");
        let ret = (price - prev) / prev;
        series.prices.push(price);
        series.returns.push_back(ret);
        if series.returns.len() > window {
            series.returns.pop_front();
        }
        Ok(ret)
    }

    /// Latest closing price of `stock`.
    pub fn last_price(&self, stock: usize) -> Result<f64, EnvError> {
        Ok(*self.series(stock)?.prices.last().expect("series always holds at least one price"))
    }

    /// Full price history of `stock` (for audit export).
    pub fn prices(&self, stock: usize) -> Result<&[f64], EnvError> {
        Ok(&self.series(stock)?.prices)
    }

    /// Number of returns currently in the window of `stock`.
    pub fn window_len(&self, stock: usize) -> Result<usize, EnvError> {
        Ok(self.series(stock)?.returns.len())
    }

    /// The windowed simple returns of `stock`, oldest first. Errors until the
    /// stock has at least two prices (one return).
    pub fn rolling_returns(
        &self,
        stock: usize,
    ) -> Result<impl Iterator<Item = f64> + '_, EnvError> {
        let series = self.series(stock)?;
        if series.prices.len() < 2 {
            return Err(EnvError::InsufficientHistory { stock, prices: series.prices.len() });
        }
        Ok(series.returns.iter().copied())
    }

    /// Moment accumulator over the windowed returns of `stock`.
    pub fn window_stats(&self, stock: usize) -> Result<RunningStats, EnvError> {
        let returns = self.rolling_returns(stock)?;
        Ok(RunningStats::from_samples(returns).expect("returns from finite prices are finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RunningStats;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn true_variances_match_closed_forms() {
        let u = DistributionSpec::Uniform { lower: 0.0, upper: 1.0 };
        assert_relative_eq!(u.true_variance(), 1.0 / 12.0, max_relative = 1e-15);
        let b = DistributionSpec::Bernoulli { p: 0.1838 };
        assert_abs_diff_eq!(b.true_variance(), 0.15002, epsilon = 1e-5);
        let g = DistributionSpec::Gaussian { mean: 0.0, std_dev: 0.3 };
        assert_relative_eq!(g.true_variance(), 0.09, max_relative = 1e-15);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(DistributionSpec::Uniform { lower: 1.0, upper: 1.0 }.validate().is_err());
        assert!(DistributionSpec::Uniform { lower: f64::NAN, upper: 1.0 }.validate().is_err());
        assert!(DistributionSpec::Bernoulli { p: 1.2 }.validate().is_err());
        assert!(DistributionSpec::Gaussian { mean: 0.0, std_dev: 0.0 }.validate().is_err());
        assert!(GbmSpec { s0: -1.0, drift: 0.0, vol: 0.2, dt: TRADING_DAY }.validate().is_err());
        assert!(GbmSpec { s0: 100.0, drift: 0.0, vol: 0.2, dt: 0.0 }.validate().is_err());
    }

    #[test]
    fn samples_stay_in_support_and_match_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = DistributionSpec::Uniform { lower: -0.25, upper: 1.25 };
        let mut stats = RunningStats::new();
        for _ in 0..100_000 {
            let x = spec.sample(&mut rng);
            assert!((-0.25..1.25).contains(&x));
            stats.push(x).unwrap();
        }
        // 3 standard errors of the Monte Carlo mean and variance.
        let n = stats.count() as f64;
        let se_mean = (spec.true_variance() / n).sqrt();
        assert_abs_diff_eq!(stats.mean(), spec.true_mean(), epsilon = 3.0 * se_mean);
        // Var of the variance estimator for U(l,u): (m4 - sigma^4) / n with
        // m4 = width^4 / 80.
        let width: f64 = 1.5;
        let var_of_var = (width.powi(4) / 80.0 - spec.true_variance().powi(2)) / n;
        assert_abs_diff_eq!(
            stats.unbiased_variance().unwrap(),
            spec.true_variance(),
            epsilon = 3.0 * var_of_var.sqrt()
        );
    }

    #[test]
    fn bernoulli_samples_are_binary_with_matching_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let spec = DistributionSpec::Bernoulli { p: 0.3 };
        let mut ones = 0u64;
        for _ in 0..100_000 {
            let x = spec.sample(&mut rng);
            assert!(x == 0.0 || x == 1.0);
            ones += (x == 1.0) as u64;
        }
        let p_hat = ones as f64 / 1.0e5;
        assert_abs_diff_eq!(p_hat, 0.3, epsilon = 3.0 * (0.3f64 * 0.7 / 1.0e5).sqrt());
    }

    #[test]
    fn gbm_step_matches_exact_discretization() {
        let gbm = GbmSpec { s0: 100.0, drift: 0.05, vol: 0.2, dt: TRADING_DAY };
        // z = 0 leaves only the drift correction.
        assert_abs_diff_eq!(gbm.step(100.0, 0.0), 100.011_905_9, epsilon = 1e-6);
        // As vol -> 0 the step tends to pure drift growth.
        let calm = GbmSpec { vol: 1e-12, ..gbm };
        assert_abs_diff_eq!(calm.step(100.0, 0.0), 100.019_843_2, epsilon = 1e-6);
    }

    #[test]
    fn gbm_log_increments_match_target_moments() {
        let gbm = GbmSpec { s0: 100.0, drift: 0.08, vol: 0.4, dt: TRADING_DAY };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut stats = RunningStats::new();
        let mut price = gbm.s0;
        for _ in 0..200_000 {
            let z: f64 = rand_distr::Distribution::sample(&StandardNormal, &mut rng);
            let next = gbm.step(price, z);
            stats.push((next / price).ln()).unwrap();
            price = next;
        }
        let n = stats.count() as f64;
        let sd = gbm.log_increment_variance().sqrt();
        assert_abs_diff_eq!(stats.mean(), gbm.log_increment_mean(), epsilon = 3.0 * sd / n.sqrt());
        // SE of the variance of a Gaussian sample is sigma^2 * sqrt(2 / n).
        assert_abs_diff_eq!(
            stats.unbiased_variance().unwrap(),
            gbm.log_increment_variance(),
            epsilon = 3.0 * gbm.log_increment_variance() * (2.0 / n).sqrt()
        );
    }

    #[test]
    fn rolling_window_keeps_most_recent_returns() {
        let mut market = MarketState::new(3, &[100.0]).unwrap();
        assert!(matches!(
            market.rolling_returns(0),
            Err(EnvError::InsufficientHistory { stock: 0, prices: 1 })
        ));
        for price in [110.0, 99.0, 99.0, 198.0, 99.0] {
            market.push_price(0, price).unwrap();
        }
        // 5 returns were generated; the window holds the last 3.
        let returns: Vec<f64> = market.rolling_returns(0).unwrap().collect();
        assert_eq!(returns.len(), 3);
        assert_abs_diff_eq!(returns[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(returns[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(returns[2], -0.5, epsilon = 1e-15);
        assert_eq!(market.prices(0).unwrap().len(), 6);
        assert!(matches!(market.push_price(1, 90.0), Err(EnvError::UnknownStock { .. })));
        assert!(market.push_price(0, -1.0).is_err());
    }

    #[test]
    fn window_stats_match_direct_accumulation() {
        let mut market = MarketState::new(90, &[50.0, 80.0]).unwrap();
        let mut direct = RunningStats::new();
        let mut prev = 80.0;
        for i in 1..=40 {
            let price = 80.0 + (i as f64) * ((i % 3) as f64 - 1.0);
            market.push_price(1, price).unwrap();
            direct.push((price - prev) / prev).unwrap();
            prev = price;
        }
        let windowed = market.window_stats(1).unwrap();
        assert_eq!(windowed.count(), direct.count());
        assert_relative_eq!(
            windowed.unbiased_variance().unwrap(),
            direct.unbiased_variance().unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn black_scholes_call_behaves_sanely() {
        // At the money, zero rate: C ~= 0.3989 * S * sigma * sqrt(T) for
        // small sigma * sqrt(T).
        let c = black_scholes_call(100.0, 100.0, 0.3, TRADING_DAY);
        assert_relative_eq!(c, 0.398_94 * 100.0 * 0.3 * TRADING_DAY.sqrt(), max_relative = 5e-3);
        // Monotone in volatility.
        assert!(black_scholes_call(100.0, 100.0, 0.6, TRADING_DAY) > c);
        // Degenerate vol collapses to intrinsic value.
        assert_eq!(black_scholes_call(100.0, 100.0, 0.0, TRADING_DAY), 0.0);
        assert_eq!(black_scholes_call(105.0, 100.0, 0.0, TRADING_DAY), 5.0);
        // Never below intrinsic, never above spot.
        let deep = black_scholes_call(120.0, 100.0, 0.5, 0.5);
        assert!(deep > 20.0 && deep < 120.0);
    }

    #[test]
    fn option_terms_default_to_atm_black_scholes() {
        let terms = OptionTerms::default();
        let strike = terms.strike(100.0);
        assert_eq!(strike, 100.0);
        let premium = terms.premium(100.0, strike, 0.02, TRADING_DAY);
        assert!(premium > 0.0 && premium < 2.0);
        // Executed out-of-the-money payoff is exactly -premium.
        assert_abs_diff_eq!(terms.payoff(99.0, strike, premium), -premium, epsilon = 1e-15);
        assert_abs_diff_eq!(terms.payoff(103.0, strike, premium), 3.0 - premium, epsilon = 1e-12);
        let fixed = OptionTerms { premium: PremiumRule::Fixed { amount: 1.5 }, ..terms };
        assert_eq!(fixed.premium(100.0, strike, 0.02, TRADING_DAY), 1.5);
    }
}
