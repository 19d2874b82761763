//! Two-stage option-trading case study on simulated markets.
//!
//! Each market simulates `stocks` geometric-Brownian-motion price paths
//! with per-stock parameters drawn once per market. The pipeline:
//!
//! 1. **Screening.** Sequential halving over daily simple returns keeps the
//!    `shortlist` stocks whose returns show the largest variance. Pulling a
//!    stock advances only that stock's path by one day (per-arm clocks).
//! 2. **Warm-up.** Every stock's path is advanced until its rolling return
//!    window is full, so both strategies start from identical, fully
//!    warmed market state.
//! 3. **Trading.** A bandit policy runs over its candidate stocks for
//!    `phase2_budget` pulls. Each pull prices an at-the-money one-day call
//!    on the chosen stock (strike = previous close, premium = Black–Scholes
//!    from the rolling-window volatility), advances that stock's path by
//!    one day, and feeds the realized daily return back to the policy as
//!    its reward. The option is bought only if the new price exceeds the
//!    strike; an executed trade books the exercise value `S_t − R` as
//!    reward and the premium as cost.
//!
//! The pipeline runs the variance-targeting UCB policy over the shortlist;
//! the baseline runs the classic mean-targeting UCB1 policy over all
//! stocks. Both strategies in one market consume identical per-stock price
//! streams: stepping stock `i` for the j-th time after warm-up gives the
//! same price under either strategy, so the profit comparison is paired.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::env::{GbmSpec, MarketState, OptionTerms, TRADING_DAY};
use crate::policies::{Policy, PolicyContext, Shvv, Ucb1, UcbVv};
use crate::seed;

use super::output::{csv_table, fmt_f64, log_spaced_points, write_experiment_outputs};
use super::{
    mean_and_stderr, with_pool, CaseStudyConfig, ExperimentSpec, HarnessError, OutputFiles,
    RunRecord, TracePoint,
};

/// Exercise value accumulated on one shortlisted stock.
#[derive(Debug, Clone, Serialize)]
pub struct StockReward {
    pub stock: usize,
    pub reward: f64,
}

/// Per-market trading report: the shortlist with per-stock accumulated
/// rewards, plus reward/premium totals.
#[derive(Debug, Clone, Serialize)]
pub struct TradingReport {
    pub market: u64,
    pub shortlist: Vec<usize>,
    /// Accumulated exercise value per shortlisted stock (pipeline).
    pub stocks: Vec<StockReward>,
    /// Sum of exercise values over all executed pipeline trades.
    pub total_reward: f64,
    /// Sum of premiums over all executed pipeline trades.
    pub total_premium: f64,
    /// `total_reward − total_premium`.
    pub net_profit: f64,
    /// Net profit of the mean-targeting baseline on the same market.
    pub baseline_net_profit: f64,
}

/// Everything recorded about one simulated market.
#[derive(Debug)]
pub struct MarketRun {
    pub market: u64,
    /// Trading-stage record of the variance-targeting pipeline.
    pub pipeline: RunRecord,
    /// Trading-stage record of the mean-targeting baseline.
    pub baseline: RunRecord,
    pub report: TradingReport,
    /// Per-stock full price paths as realized under the pipeline strategy,
    /// kept only when the config asks for them.
    pub paths: Option<Vec<Vec<f64>>>,
}

/// Full results of a case study.
#[derive(Debug)]
pub struct CaseStudyOutcome {
    pub config: CaseStudyConfig,
    pub markets: Vec<MarketRun>,
    pub median_pipeline_profit: f64,
    pub median_baseline_profit: f64,
    /// Mean cumulative net profit across markets at thinned step indices.
    pub pipeline_trace: Vec<TracePoint>,
    pub baseline_trace: Vec<TracePoint>,
}

/// One market's mutable simulation state: prices plus per-stock noise
/// streams. Cloning it forks the market, and both forks then produce
/// identical per-stock price continuations.
#[derive(Clone)]
struct Market {
    state: MarketState,
    specs: Vec<GbmSpec>,
    rngs: Vec<ChaCha8Rng>,
}

impl Market {
    /// Advance `stock` by one day; returns its simple return.
    fn step(&mut self, stock: usize) -> Result<f64, HarnessError> {
        let prev = self.state.last_price(stock)?;
        let z: f64 = StandardNormal.sample(&mut self.rngs[stock]);
        let price = self.specs[stock].step(prev, z);
        Ok(self.state.push_price(stock, price)?)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Outcome of one trading stage.
struct StageResult {
    record: RunRecord,
    /// Exercise value accumulated per stock over executed trades.
    gross_by_stock: Vec<f64>,
    total_reward: f64,
    total_premium: f64,
    net_profit: f64,
}

/// Run the trading stage by driving `policy` over the candidate stocks.
/// Arm `i` of the policy is `candidates[i]`; each pull advances that
/// stock's path by one day and feeds the realized daily return back as the
/// policy's reward.
fn run_trading_stage(
    market: &mut Market,
    candidates: &[usize],
    steps: u64,
    market_id: u64,
    num_stocks: usize,
    policy: &mut dyn Policy,
    policy_rng: &mut ChaCha8Rng,
) -> Result<StageResult, HarnessError> {
    let terms = OptionTerms::default();
    let mut ctx = PolicyContext::new(candidates.len(), steps);
    let mut record = RunRecord::new(market_id, num_stocks);
    let mut trace = Vec::with_capacity(steps as usize);
    let mut gross_by_stock = vec![0.0; num_stocks];
    let mut total_reward = 0.0;
    let mut total_premium = 0.0;
    for _ in 1..=steps {
        let arm = policy.select(&ctx, policy_rng);
        let stock = candidates[arm];

        let prev_close = market.state.last_price(stock)?;
        let strike = terms.strike(prev_close);
        let daily_vol = market
            .state
            .window_stats(stock)?
            .unbiased_variance()
            .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?
            .sqrt();
        let premium = terms.premium(prev_close, strike, daily_vol, TRADING_DAY);

        let ret = market.step(stock)?;
        ctx.record(arm, ret);
        policy.observe(arm, ret)?;
        let s_t = market.state.last_price(stock)?;
        // The option is bought only when it finishes in the money;
        // otherwise the step books nothing.
        if s_t > strike {
            let exercise_value = s_t - strike;
            gross_by_stock[stock] += exercise_value;
            total_reward += exercise_value;
            total_premium += premium;
        }
        trace.push(total_reward - total_premium);
        record.chosen_arms.push(stock as u32);
        record.final_pull_counts[stock] += 1;
    }
    let net_profit = total_reward - total_premium;
    record.profit_trace = Some(trace);
    record.premium_total = Some(total_premium);
    Ok(StageResult { record, gross_by_stock, total_reward, total_premium, net_profit })
}

fn run_market(config: &CaseStudyConfig, market_id: u64) -> Result<MarketRun, HarnessError> {
    // Per-market instance: stock parameters from the setup stream, price
    // noise from per-stock market streams.
    let mut param_rng = ChaCha8Rng::seed_from_u64(seed::setup_seed(config.base_seed, market_id));
    let specs: Vec<GbmSpec> =
        (0..config.stocks).map(|_| config.gbm.sample(&mut param_rng)).collect();
    let initial_prices: Vec<f64> = specs.iter().map(|s| s.s0).collect();
    let mut market = Market {
        state: MarketState::new(config.window, &initial_prices)?,
        specs,
        rngs: (0..config.stocks)
            .map(|stock| {
                ChaCha8Rng::seed_from_u64(seed::market_seed(
                    config.base_seed,
                    market_id,
                    stock as u64,
                ))
            })
            .collect(),
    };

    // Stage 1: sequential halving on daily returns keeps the highest-
    // variance stocks. The policy is deterministic; the rng argument of
    // select is unused but required by the trait.
    let mut screener = Shvv::new(config.stocks, config.phase1_budget, config.shortlist, false)?;
    let mut ctx = PolicyContext::new(config.stocks, config.phase1_budget);
    let mut policy_rng =
        ChaCha8Rng::seed_from_u64(seed::derive_seed(config.base_seed, market_id, 0));
    for _ in 0..config.phase1_budget {
        if screener.done() {
            break;
        }
        let stock = screener.select(&ctx, &mut policy_rng);
        let ret = market.step(stock)?;
        ctx.record(stock, ret);
        screener.observe(stock, ret)?;
    }
    let shortlist: Vec<usize> = screener.survivors().to_vec();

    // Warm-up: every stock (shortlisted or not) gets a full rolling window
    // before trading starts, so both strategies begin from the same state.
    for stock in 0..config.stocks {
        while market.state.window_len(stock)? < config.window {
            market.step(stock)?;
        }
    }

    // Stage 2: fork the warmed market so both strategies see identical
    // per-stock price continuations.
    let mut pipeline_market = market.clone();
    let mut baseline_market = market;
    let mut pipeline_policy = UcbVv::new(None);
    let mut pipeline_rng =
        ChaCha8Rng::seed_from_u64(seed::derive_seed(config.base_seed, market_id, 1));
    let pipeline = run_trading_stage(
        &mut pipeline_market,
        &shortlist,
        config.phase2_budget,
        market_id,
        config.stocks,
        &mut pipeline_policy,
        &mut pipeline_rng,
    )?;
    let all_stocks: Vec<usize> = (0..config.stocks).collect();
    let mut baseline_policy = Ucb1::new();
    let mut baseline_rng =
        ChaCha8Rng::seed_from_u64(seed::derive_seed(config.base_seed, market_id, 2));
    let baseline = run_trading_stage(
        &mut baseline_market,
        &all_stocks,
        config.phase2_budget,
        market_id,
        config.stocks,
        &mut baseline_policy,
        &mut baseline_rng,
    )?;

    let stocks_rewards = shortlist
        .iter()
        .map(|&stock| StockReward { stock, reward: pipeline.gross_by_stock[stock] })
        .collect();
    let report = TradingReport {
        market: market_id,
        shortlist,
        stocks: stocks_rewards,
        total_reward: pipeline.total_reward,
        total_premium: pipeline.total_premium,
        net_profit: pipeline.net_profit,
        baseline_net_profit: baseline.net_profit,
    };
    let paths = config.emit_market_paths.then(|| {
        (0..config.stocks)
            .map(|stock| {
                pipeline_market.state.prices(stock).expect("stock indices are in range").to_vec()
            })
            .collect()
    });
    Ok(MarketRun {
        market: market_id,
        pipeline: pipeline.record,
        baseline: baseline.record,
        report,
        paths,
    })
}

/// Run the case study. Results are a pure function of the config; worker
/// count only affects wall-clock time.
pub fn run_case_study(config: &CaseStudyConfig) -> Result<CaseStudyOutcome, HarnessError> {
    config.validate()?;
    // Surface an infeasible screening budget before spawning workers.
    Shvv::new(config.stocks, config.phase1_budget, config.shortlist, false)?;

    let markets: Vec<MarketRun> = with_pool(config.threads, || {
        (0..config.markets)
            .into_par_iter()
            .map(|market_id| run_market(config, market_id))
            .collect::<Result<Vec<_>, HarnessError>>()
    })??;

    let mut pipeline_profits: Vec<f64> = markets.iter().map(|m| m.report.net_profit).collect();
    let mut baseline_profits: Vec<f64> =
        markets.iter().map(|m| m.report.baseline_net_profit).collect();
    let median_pipeline_profit = median(&mut pipeline_profits);
    let median_baseline_profit = median(&mut baseline_profits);

    let trace_ts = log_spaced_points(config.phase2_budget, 100);
    let trace_of = |pick: fn(&MarketRun) -> &RunRecord| -> Vec<TracePoint> {
        trace_ts
            .iter()
            .map(|&t| {
                let at_t: Vec<f64> = markets
                    .iter()
                    .map(|m| {
                        let trace = pick(m).profit_trace.as_deref().unwrap_or(&[]);
                        trace[(t as usize).min(trace.len()) - 1]
                    })
                    .collect();
                let (mean, stderr) = mean_and_stderr(&at_t);
                TracePoint { t, mean, stderr }
            })
            .collect()
    };
    let pipeline_trace = trace_of(|m| &m.pipeline);
    let baseline_trace = trace_of(|m| &m.baseline);

    Ok(CaseStudyOutcome {
        config: config.clone(),
        markets,
        median_pipeline_profit,
        median_baseline_profit,
        pipeline_trace,
        baseline_trace,
    })
}

impl CaseStudyOutcome {
    /// Write `resolved_config.json`, `summary.json`,
    /// `trading_reports.csv`, and `cumprofit_vs_t.csv` into `out_dir`.
    pub fn write(&self, out_dir: &std::path::Path) -> Result<OutputFiles, HarnessError> {
        let resolved = ExperimentSpec::CaseStudy(self.config.clone()).to_json_value();
        let reports: Vec<&TradingReport> = self.markets.iter().map(|m| &m.report).collect();
        let summary = serde_json::json!({
            "kind": "case_study",
            "config_hash": super::config_hash(&resolved)?,
            "markets": self.config.markets,
            "median_pipeline_profit": self.median_pipeline_profit,
            "median_baseline_profit": self.median_baseline_profit,
            "reports": reports,
        });
        let mut report_rows = Vec::new();
        for report in &reports {
            for sr in &report.stocks {
                report_rows.push(vec![
                    report.market.to_string(),
                    sr.stock.to_string(),
                    fmt_f64(sr.reward),
                    fmt_f64(report.total_reward),
                    fmt_f64(report.total_premium),
                    fmt_f64(report.net_profit),
                    fmt_f64(report.baseline_net_profit),
                ]);
            }
        }
        let reports_csv = csv_table(
            &[
                "market",
                "stock",
                "reward",
                "total_reward",
                "total_premium",
                "net_profit",
                "baseline_net_profit",
            ],
            &report_rows,
        );
        let mut profit_rows = Vec::new();
        for (strategy, trace) in
            [("pipeline", &self.pipeline_trace), ("baseline", &self.baseline_trace)]
        {
            for p in trace {
                profit_rows.push(vec![
                    strategy.to_string(),
                    p.t.to_string(),
                    fmt_f64(p.mean),
                    fmt_f64(p.stderr),
                ]);
            }
        }
        let profit_csv = csv_table(&["strategy", "t", "mean_profit", "stderr"], &profit_rows);
        let mut tables =
            vec![("trading_reports.csv", reports_csv), ("cumprofit_vs_t.csv", profit_csv)];
        if self.config.emit_market_paths {
            let mut path_rows = Vec::new();
            for run in &self.markets {
                if let Some(paths) = &run.paths {
                    for (stock, prices) in paths.iter().enumerate() {
                        for (step, price) in prices.iter().enumerate() {
                            path_rows.push(vec![
                                run.market.to_string(),
                                stock.to_string(),
                                step.to_string(),
                                fmt_f64(*price),
                            ]);
                        }
                    }
                }
            }
            tables.push((
                "market_paths.csv",
                csv_table(&["market", "stock", "step", "price"], &path_rows),
            ));
        }
        write_experiment_outputs(out_dir, &resolved, &summary, &tables)
    }
}
