//! Fixed-budget best-variance-arm identification runner.
//!
//! A run covers one or more *tables*: arm families at specific arm counts
//! (the built-in setup families sweep K ∈ {16, 32, 64}; explicit arms form
//! a single table). Within a table, every policy replays the identical
//! reward tape per replication — the same pairing contract as the regret
//! runner — so error-rate comparisons between policies are paired.
//!
//! A recommendation counts as correct when the recommended arm's true
//! variance equals the maximum true variance (exact ties are accepted).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::env::DistributionSpec;
use crate::policies::PolicyContext;
use crate::seed;

use super::output::{csv_table, fmt_f64, write_experiment_outputs};
use super::setups::build_bai_setup;
use super::{
    error_rate_and_stderr, with_pool, ArmSource, BaiConfig, ExperimentSpec, HarnessError,
    OutputFiles, RunRecord,
};

/// Aggregated error rate for one (table, policy) pair.
#[derive(Debug, Clone, Serialize)]
pub struct BaiTable {
    /// Setup family id for preset arms, `None` for explicit arms.
    pub setup: Option<u8>,
    pub policy: String,
    pub k: usize,
    /// Pull budget of this table.
    pub n: u64,
    pub error_rate: f64,
    pub standard_error: f64,
    pub replications: u64,
    /// Mean executed pulls (halving schedules may not consume the full
    /// budget).
    pub mean_total_steps: f64,
}

/// Full results of an identification experiment.
#[derive(Debug)]
pub struct BaiOutcome {
    pub config: BaiConfig,
    /// One row per (table, policy), tables in config order.
    pub tables: Vec<BaiTable>,
    /// `records[table][policy][replication]`.
    pub records: Vec<Vec<Vec<RunRecord>>>,
}

/// One table to run: an arm family instantiated at a specific arm count.
struct TableSpec {
    setup: Option<u8>,
    k: usize,
    budget: u64,
    /// Fixed arms for explicit tables; preset tables rebuild arms per
    /// replication (family 5 redraws supports each time).
    arms: Option<Vec<DistributionSpec>>,
}

impl TableSpec {
    fn arms_for_replication(
        &self,
        base_seed: u64,
        replication: u64,
    ) -> Result<Vec<DistributionSpec>, HarnessError> {
        match (&self.arms, self.setup) {
            (Some(arms), _) => Ok(arms.clone()),
            (None, Some(id)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::setup_seed(base_seed, replication));
                build_bai_setup(id, self.k, &mut rng)
            }
            (None, None) => unreachable!("tables carry either arms or a setup id"),
        }
    }
}

fn run_bai_replication(
    config: &BaiConfig,
    table: &TableSpec,
    replication: u64,
) -> Result<Vec<RunRecord>, HarnessError> {
    let arms = table.arms_for_replication(config.base_seed, replication)?;
    let k = arms.len();
    let best_variance = arms.iter().map(|a| a.true_variance()).fold(f64::NEG_INFINITY, f64::max);

    let mut tapes: Vec<super::regret::ArmTape> = arms
        .iter()
        .enumerate()
        .map(|(arm, spec)| {
            super::regret::ArmTape::new(
                *spec,
                seed::env_arm_seed(config.base_seed, replication, arm as u64),
            )
        })
        .collect();

    let mut records = Vec::with_capacity(config.policies.len());
    for (policy_index, descriptor) in config.policies.iter().enumerate() {
        let mut policy = descriptor.build(k, table.budget)?;
        let mut ctx = PolicyContext::new(k, table.budget);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_seed(
            config.base_seed,
            replication,
            policy_index as u64,
        ));
        let mut record = RunRecord::new(replication, k);
        for _ in 0..table.budget {
            if policy.done() {
                break;
            }
            let arm = policy.select(&ctx, &mut rng);
            let pull_index = record.final_pull_counts[arm] as usize;
            let reward = tapes[arm].get(pull_index);
            ctx.record(arm, reward);
            policy.observe(arm, reward)?;
            record.chosen_arms.push(arm as u32);
            record.final_pull_counts[arm] += 1;
        }
        let recommendation = policy.recommend(&ctx);
        record.correct =
            Some(recommendation.is_some_and(|r| arms[r].true_variance() == best_variance));
        record.recommendation = recommendation;
        records.push(record);
    }
    Ok(records)
}

/// Run an identification experiment. Results are a pure function of the
/// config; worker count only affects wall-clock time.
pub fn run_bai_experiment(config: &BaiConfig) -> Result<BaiOutcome, HarnessError> {
    config.validate()?;
    let table_specs: Vec<TableSpec> = match &config.arms {
        ArmSource::Explicit { arms } => vec![TableSpec {
            setup: None,
            k: arms.len(),
            budget: config.budget.expect("validation requires a budget for explicit arms"),
            arms: Some(arms.clone()),
        }],
        ArmSource::Preset { id, k_values } => k_values
            .iter()
            .map(|&k| TableSpec { setup: Some(*id), k, budget: config.budget_for(k), arms: None })
            .collect(),
    };

    // Surface schedule infeasibility before spawning workers.
    for table in &table_specs {
        for descriptor in &config.policies {
            descriptor.build(table.k, table.budget)?;
        }
    }

    let per_table: Vec<Vec<Vec<RunRecord>>> = with_pool(config.threads, || {
        table_specs
            .iter()
            .map(|table| {
                (0..config.replications)
                    .into_par_iter()
                    .map(|rep| run_bai_replication(config, table, rep))
                    .collect::<Result<Vec<_>, HarnessError>>()
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })??;

    let mut tables = Vec::new();
    let mut records = Vec::with_capacity(table_specs.len());
    for (table, replication_records) in table_specs.iter().zip(per_table) {
        let mut by_policy: Vec<Vec<RunRecord>> = (0..config.policies.len())
            .map(|_| Vec::with_capacity(config.replications as usize))
            .collect();
        for rep_records in replication_records {
            for (policy_index, record) in rep_records.into_iter().enumerate() {
                by_policy[policy_index].push(record);
            }
        }
        for (descriptor, policy_records) in config.policies.iter().zip(&by_policy) {
            let correct: Vec<bool> =
                policy_records.iter().map(|r| r.correct.unwrap_or(false)).collect();
            let (error_rate, standard_error) = error_rate_and_stderr(&correct);
            let mean_total_steps =
                policy_records.iter().map(|r| r.chosen_arms.len() as f64).sum::<f64>()
                    / policy_records.len() as f64;
            tables.push(BaiTable {
                setup: table.setup,
                policy: descriptor.label(),
                k: table.k,
                n: table.budget,
                error_rate,
                standard_error,
                replications: config.replications,
                mean_total_steps,
            });
        }
        records.push(by_policy);
    }

    Ok(BaiOutcome { config: config.clone(), tables, records })
}

impl BaiOutcome {
    /// Write `resolved_config.json`, `summary.json`, `error_rates.csv`,
    /// and (for preset sweeps) `error_vs_K.csv` into `out_dir`.
    pub fn write(&self, out_dir: &std::path::Path) -> Result<OutputFiles, HarnessError> {
        let resolved = ExperimentSpec::Bai(self.config.clone()).to_json_value();
        let summary = serde_json::json!({
            "kind": "bai",
            "config_hash": super::config_hash(&resolved)?,
            "replications": self.config.replications,
            "tables": self.tables,
        });
        let rate_rows: Vec<Vec<String>> = self
            .tables
            .iter()
            .map(|t| {
                vec![
                    t.policy.clone(),
                    t.k.to_string(),
                    t.n.to_string(),
                    fmt_f64(t.error_rate),
                    fmt_f64(t.standard_error),
                    t.replications.to_string(),
                ]
            })
            .collect();
        let mut files = vec![(
            "error_rates.csv",
            csv_table(&["policy", "K", "n", "error_rate", "stderr", "replications"], &rate_rows),
        )];
        if matches!(self.config.arms, ArmSource::Preset { .. }) {
            let k_rows: Vec<Vec<String>> = self
                .tables
                .iter()
                .map(|t| {
                    vec![
                        t.policy.clone(),
                        t.k.to_string(),
                        fmt_f64(t.error_rate),
                        fmt_f64(t.standard_error),
                    ]
                })
                .collect();
            files.push((
                "error_vs_K.csv",
                csv_table(&["policy", "K", "error_rate", "stderr"], &k_rows),
            ));
        }
        write_experiment_outputs(out_dir, &resolved, &summary, &files)
    }
}
