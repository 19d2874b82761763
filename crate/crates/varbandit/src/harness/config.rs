//! Experiment configuration: JSON-facing structs, defaults, validation.
//!
//! A configuration file is a single JSON object whose `"kind"` field picks
//! the experiment type; the remaining fields belong to that kind's config
//! struct. Unknown fields are rejected so typos fail loudly instead of
//! silently running a default. Every config carries its own `base_seed`,
//! making the file a complete, reproducible description of the run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::env::{DistributionSpec, GbmSpec, TRADING_DAY};
use crate::policies::PolicyDescriptor;

use super::HarnessError;

fn invalid(msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::InvalidConfig(msg.to_string())
}

/// A parsed experiment configuration of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    Regret(RegretConfig),
    Bai(BaiConfig),
    BoundSweep(BoundSweepConfig),
    CaseStudy(CaseStudyConfig),
}

impl ExperimentSpec {
    /// The `"kind"` tag this spec serializes under.
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Regret(_) => "regret",
            ExperimentSpec::Bai(_) => "bai",
            ExperimentSpec::BoundSweep(_) => "bound_sweep",
            ExperimentSpec::CaseStudy(_) => "case_study",
        }
    }

    /// Parse and validate a configuration from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid(format!("malformed JSON: {e}")))?;
        Self::from_json_value(value)
    }

    /// Parse and validate a configuration from an already-loaded JSON value.
    pub fn from_json_value(mut value: serde_json::Value) -> Result<Self, HarnessError> {
        let obj = value.as_object_mut().ok_or_else(|| invalid("config must be a JSON object"))?;
        let kind = match obj.remove("kind") {
            Some(serde_json::Value::String(s)) => s,
            Some(_) => return Err(invalid("\"kind\" must be a string")),
            None => return Err(invalid("config is missing the \"kind\" field")),
        };
        let spec = match kind.as_str() {
            "regret" => ExperimentSpec::Regret(
                serde_json::from_value(value)
                    .map_err(|e| invalid(format!("regret config: {e}")))?,
            ),
            "bai" => ExperimentSpec::Bai(
                serde_json::from_value(value).map_err(|e| invalid(format!("bai config: {e}")))?,
            ),
            "bound_sweep" => ExperimentSpec::BoundSweep(
                serde_json::from_value(value)
                    .map_err(|e| invalid(format!("bound_sweep config: {e}")))?,
            ),
            "case_study" => ExperimentSpec::CaseStudy(
                serde_json::from_value(value)
                    .map_err(|e| invalid(format!("case_study config: {e}")))?,
            ),
            other => {
                return Err(invalid(format!(
                    "unknown experiment kind {other:?} (expected one of \
                     \"regret\", \"bai\", \"bound_sweep\", \"case_study\")"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Render the configuration back to a JSON object including its
    /// `"kind"` tag; this is the resolved form persisted next to results.
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut value = match self {
            ExperimentSpec::Regret(c) => serde_json::to_value(c),
            ExperimentSpec::Bai(c) => serde_json::to_value(c),
            ExperimentSpec::BoundSweep(c) => serde_json::to_value(c),
            ExperimentSpec::CaseStudy(c) => serde_json::to_value(c),
        }
        .expect("configs serialize to JSON objects");
        value
            .as_object_mut()
            .expect("configs serialize to JSON objects")
            .insert("kind".to_string(), self.kind().into());
        value
    }

    /// Check every invariant the runners rely on.
    pub fn validate(&self) -> Result<(), HarnessError> {
        match self {
            ExperimentSpec::Regret(c) => c.validate(),
            ExperimentSpec::Bai(c) => c.validate(),
            ExperimentSpec::BoundSweep(c) => c.validate(),
            ExperimentSpec::CaseStudy(c) => c.validate(),
        }
    }

    /// Output directory named inside the config file, if any.
    pub fn output(&self) -> Option<&PathBuf> {
        match self {
            ExperimentSpec::Regret(c) => c.output.as_ref(),
            ExperimentSpec::Bai(c) => c.output.as_ref(),
            ExperimentSpec::BoundSweep(c) => c.output.as_ref(),
            ExperimentSpec::CaseStudy(c) => c.output.as_ref(),
        }
    }
}

fn default_regret_replications() -> u64 {
    100
}
fn default_bai_replications() -> u64 {
    2000
}
fn default_sweep_replications() -> u64 {
    10_000
}
fn default_markets() -> u64 {
    50
}
fn default_stocks() -> usize {
    100
}
fn default_phase1_budget() -> u64 {
    20_000
}
fn default_phase2_budget() -> u64 {
    1_000
}
fn default_shortlist() -> usize {
    8
}
fn default_window() -> usize {
    90
}
fn default_trace_points() -> usize {
    100
}
fn default_k_values() -> Vec<usize> {
    vec![16, 32, 64]
}

fn check_policies(
    policies: &[PolicyDescriptor],
    arms: Option<&[DistributionSpec]>,
    want_bai: bool,
) -> Result<(), HarnessError> {
    if policies.is_empty() {
        return Err(invalid("at least one policy is required"));
    }
    let mut labels: Vec<String> = policies.iter().map(|p| p.label()).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("policy labels must be unique within one experiment"));
    }
    for p in policies {
        if p.is_bai() != want_bai {
            let (have, need) = if want_bai {
                ("a regret policy", "identification experiments take identification policies")
            } else {
                ("an identification policy", "regret experiments take regret policies")
            };
            return Err(invalid(format!("{:?} is {have}; {need}", p.label())));
        }
        if p.requires_bernoulli() {
            let all_bernoulli = arms
                .map(|arms| arms.iter().all(|a| matches!(a, DistributionSpec::Bernoulli { .. })));
            if all_bernoulli != Some(true) {
                return Err(invalid(format!(
                    "policy {:?} needs every arm to be a Bernoulli distribution",
                    p.label()
                )));
            }
        }
    }
    Ok(())
}

fn check_arms(arms: &[DistributionSpec]) -> Result<(), HarnessError> {
    if arms.len() < 2 {
        return Err(invalid("at least two arms are required"));
    }
    for (i, a) in arms.iter().enumerate() {
        a.validate().map_err(|e| invalid(format!("arm {i}: {e}")))?;
    }
    Ok(())
}

/// Regret-minimization experiment: fixed arms, one or more policies, a
/// shared horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretConfig {
    /// Reward distribution of each arm.
    pub arms: Vec<DistributionSpec>,
    /// Policies to run against the same reward tapes.
    pub policies: Vec<PolicyDescriptor>,
    /// Pull budget per replication.
    #[serde(rename = "n")]
    pub horizon: u64,
    #[serde(default = "default_regret_replications")]
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Number of (log-spaced) points kept per regret curve.
    #[serde(default = "default_trace_points")]
    pub trace_points: usize,
    /// Keep the full per-step curve instead of thinning it.
    #[serde(default)]
    pub full_traces: bool,
    /// Worker count; `None` defers to `VARBANDIT_THREADS` or the core count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RegretConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        check_arms(&self.arms)?;
        check_policies(&self.policies, Some(&self.arms), false)?;
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if self.trace_points == 0 {
            return Err(invalid("trace_points must be at least 1"));
        }
        Ok(())
    }
}

/// Where a best-arm-identification experiment gets its arms from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ArmSource {
    /// A fixed list of distributions (one table, one arm count).
    Explicit { arms: Vec<DistributionSpec> },
    /// One of the six built-in uniform-arm families (see
    /// [`super::build_bai_setup`]), swept over several arm counts.
    Preset {
        id: u8,
        #[serde(default = "default_k_values")]
        k_values: Vec<usize>,
    },
}

/// Fixed-budget best-variance-arm identification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaiConfig {
    pub arms: ArmSource,
    pub policies: Vec<PolicyDescriptor>,
    /// Pull budget. Optional for presets (they default to 2000, or
    /// `125 * K` for preset 6); required for explicit arms.
    #[serde(rename = "n", default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default = "default_bai_replications")]
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Arm counts the built-in setup families are defined for.
pub(crate) const PRESET_K_VALUES: [usize; 3] = [16, 32, 64];

impl BaiConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        match &self.arms {
            ArmSource::Explicit { arms } => {
                check_arms(arms)?;
                check_policies(&self.policies, Some(arms), true)?;
                if self.budget.is_none() {
                    return Err(invalid("explicit arms require a pull budget \"n\""));
                }
            }
            ArmSource::Preset { id, k_values } => {
                if !(1..=6).contains(id) {
                    return Err(invalid(format!("preset id {id} is not in 1..=6")));
                }
                if k_values.is_empty() {
                    return Err(invalid("preset arm source needs at least one arm count"));
                }
                for &k in k_values {
                    if !PRESET_K_VALUES.contains(&k) {
                        return Err(invalid(format!(
                            "preset arm count {k} is not one of {PRESET_K_VALUES:?}"
                        )));
                    }
                }
                check_policies(&self.policies, None, true)?;
            }
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if self.budget == Some(0) {
            return Err(invalid("pull budget must be at least 1"));
        }
        Ok(())
    }

    /// Budget for a table with `k` arms: the explicit value if set, else
    /// the preset default (2000; preset 6 scales as `125 * K`).
    pub fn budget_for(&self, k: usize) -> u64 {
        if let Some(n) = self.budget {
            return n;
        }
        match &self.arms {
            ArmSource::Preset { id: 6, .. } => 125 * k as u64,
            _ => 2000,
        }
    }
}

/// Which closed-form tail bound a sweep compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBoundKind {
    /// Bounded-support variance deviation bound.
    VarianceRange,
    /// Sub-Gaussian variance deviation bound.
    VarianceSubgauss,
    /// Sharpe-ratio deviation bound.
    Sharpe,
}

impl TailBoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            TailBoundKind::VarianceRange => "variance_range",
            TailBoundKind::VarianceSubgauss => "variance_subgauss",
            TailBoundKind::Sharpe => "sharpe",
        }
    }
}

/// Monte Carlo check of a tail bound over an `(n, deviation)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSweepConfig {
    pub bound: TailBoundKind,
    /// Distribution whose estimator tail is measured.
    pub distribution: DistributionSpec,
    /// Sample sizes to sweep.
    pub sample_sizes: Vec<u64>,
    /// Deviation thresholds to sweep.
    pub deviations: Vec<f64>,
    #[serde(default = "default_sweep_replications")]
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl BoundSweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.distribution.validate().map_err(|e| invalid(format!("distribution: {e}")))?;
        if self.sample_sizes.is_empty() || self.deviations.is_empty() {
            return Err(invalid("sample_sizes and deviations must be non-empty"));
        }
        if self.sample_sizes.iter().any(|&n| n < 2) {
            return Err(invalid("every sample size must be at least 2"));
        }
        if self.deviations.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(invalid("every deviation must be finite and positive"));
        }
        if self.replications < 1000 {
            return Err(invalid(
                "tail estimation needs at least 1000 replications for a usable standard error",
            ));
        }
        match self.bound {
            TailBoundKind::VarianceRange => {
                if self.distribution.support().is_none() {
                    return Err(invalid(
                        "the bounded-support variance bound needs a distribution with bounded support",
                    ));
                }
            }
            TailBoundKind::VarianceSubgauss => {
                if self.distribution.subgauss_v2().is_none() {
                    return Err(invalid(
                        "the sub-Gaussian variance bound needs a distribution with a known variance proxy",
                    ));
                }
            }
            TailBoundKind::Sharpe => {
                if self.distribution.true_sharpe().is_none() {
                    return Err(invalid(
                        "the Sharpe bound needs a distribution with a well-defined mean/variance ratio",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sampling intervals for the per-stock geometric Brownian motion
/// parameters of a simulated market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmRanges {
    /// Initial price interval.
    pub s0: (f64, f64),
    /// Annualized drift interval.
    pub drift: (f64, f64),
    /// Annualized volatility interval.
    pub vol: (f64, f64),
}

impl Default for GbmRanges {
    fn default() -> Self {
        Self { s0: (50.0, 150.0), drift: (-0.05, 0.15), vol: (0.1, 0.6) }
    }
}

impl GbmRanges {
    fn validate(&self) -> Result<(), HarnessError> {
        for (name, (lo, hi)) in [("s0", self.s0), ("drift", self.drift), ("vol", self.vol)] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(invalid(format!(
                    "gbm range {name} must satisfy finite lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        if self.s0.0 <= 0.0 {
            return Err(invalid("gbm initial prices must be positive"));
        }
        if self.vol.0 <= 0.0 {
            return Err(invalid("gbm volatilities must be positive"));
        }
        Ok(())
    }

    /// Draw one stock's parameters.
    pub(crate) fn sample(&self, rng: &mut impl rand::Rng) -> GbmSpec {
        fn draw(rng: &mut impl rand::Rng, (lo, hi): (f64, f64)) -> f64 {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        }
        GbmSpec {
            s0: draw(rng, self.s0),
            drift: draw(rng, self.drift),
            vol: draw(rng, self.vol),
            dt: TRADING_DAY,
        }
    }
}

/// Two-stage option-trading case study over simulated markets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyConfig {
    /// Independent simulated markets (replications).
    #[serde(default = "default_markets")]
    pub markets: u64,
    /// Stocks per market.
    #[serde(default = "default_stocks")]
    pub stocks: usize,
    /// Pull budget of the identification stage.
    #[serde(default = "default_phase1_budget")]
    pub phase1_budget: u64,
    /// Trading steps of the exploitation stage.
    #[serde(default = "default_phase2_budget")]
    pub phase2_budget: u64,
    /// Number of stocks the identification stage keeps.
    #[serde(default = "default_shortlist")]
    pub shortlist: usize,
    /// Rolling-return window length used for volatility estimates.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub gbm: GbmRanges,
    #[serde(default)]
    pub base_seed: u64,
    /// Also write the simulated price paths (large).
    #[serde(default)]
    pub emit_market_paths: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            markets: default_markets(),
            stocks: default_stocks(),
            phase1_budget: default_phase1_budget(),
            phase2_budget: default_phase2_budget(),
            shortlist: default_shortlist(),
            window: default_window(),
            gbm: GbmRanges::default(),
            base_seed: 0,
            emit_market_paths: false,
            threads: None,
            output: None,
        }
    }
}

impl CaseStudyConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.markets == 0 {
            return Err(invalid("at least one market is required"));
        }
        if self.stocks < 2 {
            return Err(invalid("at least two stocks are required"));
        }
        if self.shortlist == 0 || self.shortlist >= self.stocks {
            return Err(invalid(
                "shortlist size must be at least 1 and smaller than the stock count",
            ));
        }
        if self.window < 2 {
            return Err(invalid("rolling window must cover at least 2 returns"));
        }
        if self.phase2_budget == 0 {
            return Err(invalid("the trading stage needs at least one step"));
        }
        self.gbm.validate()
    }
}
