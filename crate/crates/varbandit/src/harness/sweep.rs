//! Monte Carlo verification sweeps for the closed-form tail bounds.
//!
//! For every `(sample size, deviation)` grid cell the sweep evaluates the
//! configured bound and estimates the true tail probability by simulation,
//! producing one row per cell. Each cell runs on its own derived seed so
//! rows are independent of grid shape and of each other.

use serde::Serialize;

use crate::bounds::{
    empirical_sharpe_tail_probability, empirical_tail_probability, sharpe_concentration_bound,
    subgauss_variance_bound, variance_concentration_bound, BoundValue, DEFAULT_SHARPE_C,
    DEFAULT_SUBGAUSS_C,
};
use crate::seed;

use super::output::{csv_table, fmt_f64, write_experiment_outputs};
use super::{
    with_pool, BoundSweepConfig, ExperimentSpec, HarnessError, OutputFiles, TailBoundKind,
};

/// One grid cell: the bound next to its Monte Carlo estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub bound_name: String,
    pub n: u64,
    pub deviation: f64,
    pub bound_value: f64,
    /// True when the bound exceeds 1 and says nothing.
    pub vacuous: bool,
    pub empirical_probability: f64,
    pub standard_error: f64,
    pub replications: u64,
}

/// Full results of a bound sweep.
#[derive(Debug)]
pub struct BoundSweepOutcome {
    pub config: BoundSweepConfig,
    /// Rows in grid order: sample sizes outer, deviations inner.
    pub rows: Vec<SweepRow>,
}

fn bound_for_cell(
    config: &BoundSweepConfig,
    n: u64,
    deviation: f64,
) -> Result<BoundValue, HarnessError> {
    let value = match config.bound {
        TailBoundKind::VarianceRange => {
            let (l, u) =
                config.distribution.support().expect("validation requires bounded support");
            variance_concentration_bound(n, deviation, l, u)?
        }
        TailBoundKind::VarianceSubgauss => {
            let v2 =
                config.distribution.subgauss_v2().expect("validation requires a variance proxy");
            subgauss_variance_bound(n, deviation, v2, DEFAULT_SUBGAUSS_C)?
        }
        TailBoundKind::Sharpe => sharpe_concentration_bound(n, deviation, DEFAULT_SHARPE_C)?,
    };
    Ok(value)
}

/// Run a bound sweep. Results are a pure function of the config; worker
/// count only affects wall-clock time.
pub fn run_bound_sweep(config: &BoundSweepConfig) -> Result<BoundSweepOutcome, HarnessError> {
    config.validate()?;
    let rows = with_pool(config.threads, || -> Result<Vec<SweepRow>, HarnessError> {
        let mut rows = Vec::with_capacity(config.sample_sizes.len() * config.deviations.len());
        for (i, &n) in config.sample_sizes.iter().enumerate() {
            for (j, &deviation) in config.deviations.iter().enumerate() {
                let bound = bound_for_cell(config, n, deviation)?;
                // A per-cell seed keeps cells statistically independent of
                // one another and of the grid layout.
                let cell_seed = seed::mix_parts(&[config.base_seed, i as u64, j as u64]);
                let estimate = match config.bound {
                    TailBoundKind::VarianceRange | TailBoundKind::VarianceSubgauss => {
                        empirical_tail_probability(
                            &config.distribution,
                            n,
                            deviation,
                            config.replications,
                            cell_seed,
                        )?
                    }
                    TailBoundKind::Sharpe => empirical_sharpe_tail_probability(
                        &config.distribution,
                        n,
                        deviation,
                        config.replications,
                        cell_seed,
                    )?,
                };
                rows.push(SweepRow {
                    bound_name: config.bound.name().to_string(),
                    n,
                    deviation,
                    bound_value: bound.value,
                    vacuous: bound.vacuous,
                    empirical_probability: estimate.probability,
                    standard_error: estimate.standard_error,
                    replications: estimate.replications,
                });
            }
        }
        Ok(rows)
    })??;
    Ok(BoundSweepOutcome { config: config.clone(), rows })
}

impl BoundSweepOutcome {
    /// Write `resolved_config.json`, `summary.json`, and `bound_sweep.csv`
    /// into `out_dir`.
    pub fn write(&self, out_dir: &std::path::Path) -> Result<OutputFiles, HarnessError> {
        let resolved = ExperimentSpec::BoundSweep(self.config.clone()).to_json_value();
        let summary = serde_json::json!({
            "kind": "bound_sweep",
            "config_hash": super::config_hash(&resolved)?,
            "replications": self.config.replications,
            "rows": self.rows,
        });
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.bound_name.clone(),
                    r.n.to_string(),
                    fmt_f64(r.deviation),
                    fmt_f64(r.bound_value),
                    r.vacuous.to_string(),
                    fmt_f64(r.empirical_probability),
                    fmt_f64(r.standard_error),
                    r.replications.to_string(),
                ]
            })
            .collect();
        let csv = csv_table(
            &[
                "bound_name",
                "n",
                "deviation",
                "bound_value",
                "vacuous",
                "empirical_probability",
                "standard_error",
                "replications",
            ],
            &rows,
        );
        write_experiment_outputs(out_dir, &resolved, &summary, &[("bound_sweep.csv", csv)])
    }
}
