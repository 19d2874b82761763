//! Regret-minimization experiment runner.
//!
//! Every policy in the configuration plays the same arms for the same
//! horizon, and within one replication all policies consume the identical
//! reward tape: arm `i`'s rewards form a fixed sequence indexed by pull
//! count, seeded per `(base_seed, replication, arm)`. Two policies that
//! pull arm `i` for the j-th time therefore see the same value no matter
//! when they do it, which makes cross-policy regret differences paired and
//! sharply reduces comparison variance.
//!
//! Regret is scored against true variances (pseudo-regret): each pull of
//! arm `i` adds `max_j σ²_j − σ²_i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::env::DistributionSpec;
use crate::policies::PolicyContext;
use crate::seed;

use super::output::{csv_table, fmt_f64, log_spaced_points, write_experiment_outputs};
use super::{
    mean_and_stderr, with_pool, ExperimentSpec, HarnessError, OutputFiles, RegretConfig, RunRecord,
    TracePoint,
};

/// Aggregated results for one policy.
#[derive(Debug, Clone, Serialize)]
pub struct RegretSummary {
    /// Policy label (stable identifier used in CSV rows).
    pub policy: String,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
    /// Mean executed steps; equals the horizon for regret policies.
    pub mean_total_steps: f64,
    /// Mean pull count per arm across replications.
    pub mean_pull_counts: Vec<f64>,
    /// Mean regret curve at thinned (or all) step indices.
    pub trace: Vec<TracePoint>,
}

/// Full results of a regret experiment.
#[derive(Debug)]
pub struct RegretOutcome {
    pub config: RegretConfig,
    /// True variance gap of each arm to the best arm.
    pub gaps: Vec<f64>,
    pub summaries: Vec<RegretSummary>,
    /// Per-policy, per-replication records (same order as `config.policies`).
    pub records: Vec<Vec<RunRecord>>,
}

/// One arm's reward tape: a lazily materialized i.i.d. sequence indexed by
/// pull count.
pub(crate) struct ArmTape {
    spec: DistributionSpec,
    rng: ChaCha8Rng,
    values: Vec<f64>,
}

impl ArmTape {
    pub(crate) fn new(spec: DistributionSpec, seed: u64) -> Self {
        Self { spec, rng: ChaCha8Rng::seed_from_u64(seed), values: Vec::new() }
    }

    pub(crate) fn get(&mut self, pull_index: usize) -> f64 {
        while self.values.len() <= pull_index {
            let v = self.spec.sample(&mut self.rng);
            self.values.push(v);
        }
        self.values[pull_index]
    }
}

/// Run one replication: every policy, same tapes.
fn run_replication(
    config: &RegretConfig,
    gaps: &[f64],
    replication: u64,
) -> Result<Vec<RunRecord>, HarnessError> {
    let k = config.arms.len();
    let mut tapes: Vec<ArmTape> = config
        .arms
        .iter()
        .enumerate()
        .map(|(arm, spec)| {
            ArmTape::new(*spec, seed::env_arm_seed(config.base_seed, replication, arm as u64))
        })
        .collect();

    let mut records = Vec::with_capacity(config.policies.len());
    for (policy_index, descriptor) in config.policies.iter().enumerate() {
        let mut policy = descriptor.build(k, config.horizon)?;
        let mut ctx = PolicyContext::new(k, config.horizon);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_seed(
            config.base_seed,
            replication,
            policy_index as u64,
        ));
        let mut record = RunRecord::new(replication, k);
        let mut trace = Vec::with_capacity(config.horizon as usize);
        let mut regret = 0.0;
        for _ in 0..config.horizon {
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
            regret += gaps[arm];
            trace.push(regret);
        }
        record.regret_trace = Some(trace);
        records.push(record);
    }
    Ok(records)
}

/// Cumulative regret after step `t`, reading past the end as "no further
/// growth" for policies that stopped early.
fn regret_at(trace: &[f64], t: u64) -> f64 {
    if trace.is_empty() {
        return 0.0;
    }
    let idx = (t as usize).min(trace.len());
    trace[idx - 1]
}

/// Run a regret experiment. Results are a pure function of the config;
/// worker count only affects wall-clock time.
pub fn run_regret_experiment(config: &RegretConfig) -> Result<RegretOutcome, HarnessError> {
    config.validate()?;
    // Surface construction errors (bad parameters) before spawning workers.
    for descriptor in &config.policies {
        descriptor.build(config.arms.len(), config.horizon)?;
    }

    let true_vars: Vec<f64> = config.arms.iter().map(|a| a.true_variance()).collect();
    let best = true_vars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gaps: Vec<f64> = true_vars.iter().map(|v| best - v).collect();

    let per_replication: Vec<Vec<RunRecord>> = with_pool(config.threads, || {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| run_replication(config, &gaps, rep))
            .collect::<Result<Vec<_>, HarnessError>>()
    })??;

    // Transpose to per-policy, folding replications in index order so the
    // aggregation is independent of scheduling.
    let num_policies = config.policies.len();
    let mut records: Vec<Vec<RunRecord>> =
        (0..num_policies).map(|_| Vec::with_capacity(config.replications as usize)).collect();
    for replication_records in per_replication {
        for (policy_index, record) in replication_records.into_iter().enumerate() {
            records[policy_index].push(record);
        }
    }

    let trace_ts: Vec<u64> = if config.full_traces {
        (1..=config.horizon).collect()
    } else {
        log_spaced_points(config.horizon, config.trace_points)
    };

    let summaries: Vec<RegretSummary> = config
        .policies
        .iter()
        .zip(&records)
        .map(|(descriptor, policy_records)| {
            let finals: Vec<f64> = policy_records
                .iter()
                .map(|r| regret_at(r.regret_trace.as_deref().unwrap_or(&[]), config.horizon))
                .collect();
            let (mean_final_regret, stderr_final_regret) = mean_and_stderr(&finals);
            let mean_total_steps =
                policy_records.iter().map(|r| r.chosen_arms.len() as f64).sum::<f64>()
                    / policy_records.len() as f64;
            let k = config.arms.len();
            let mut mean_pull_counts = vec![0.0; k];
            for r in policy_records {
                for (arm, &c) in r.final_pull_counts.iter().enumerate() {
                    mean_pull_counts[arm] += c as f64;
                }
            }
            for c in &mut mean_pull_counts {
                *c /= policy_records.len() as f64;
            }
            let trace = trace_ts
                .iter()
                .map(|&t| {
                    let at_t: Vec<f64> = policy_records
                        .iter()
                        .map(|r| regret_at(r.regret_trace.as_deref().unwrap_or(&[]), t))
                        .collect();
                    let (mean, stderr) = mean_and_stderr(&at_t);
                    TracePoint { t, mean, stderr }
                })
                .collect();
            RegretSummary {
                policy: descriptor.label(),
                mean_final_regret,
                stderr_final_regret,
                mean_total_steps,
                mean_pull_counts,
                trace,
            }
        })
        .collect();

    Ok(RegretOutcome { config: config.clone(), gaps, summaries, records })
}

impl RegretOutcome {
    /// Write `resolved_config.json`, `summary.json`, and
    /// `regret_vs_time.csv` into `out_dir`.
    pub fn write(&self, out_dir: &std::path::Path) -> Result<OutputFiles, HarnessError> {
        let resolved = ExperimentSpec::Regret(self.config.clone()).to_json_value();
        let summary = serde_json::json!({
            "kind": "regret",
            "config_hash": super::config_hash(&resolved)?,
            "replications": self.config.replications,
            "n": self.config.horizon,
            "gaps": self.gaps,
            "policies": self.summaries,
        });
        let rows: Vec<Vec<String>> = self
            .summaries
            .iter()
            .flat_map(|s| {
                s.trace.iter().map(|p| {
                    vec![s.policy.clone(), p.t.to_string(), fmt_f64(p.mean), fmt_f64(p.stderr)]
                })
            })
            .collect();
        let csv = csv_table(&["policy", "t", "mean_regret", "stderr"], &rows);
        write_experiment_outputs(out_dir, &resolved, &summary, &[("regret_vs_time.csv", csv)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyDescriptor;

    fn two_arm_config() -> RegretConfig {
        RegretConfig {
            arms: vec![
                DistributionSpec::Uniform { lower: 0.0, upper: 1.0 },
                DistributionSpec::Uniform { lower: 0.25, upper: 0.75 },
            ],
            policies: vec![
                PolicyDescriptor::UcbVv { pilot_fraction: None },
                PolicyDescriptor::EpsilonGreedyV { epsilon: 0.1 },
            ],
            horizon: 400,
            replications: 6,
            base_seed: 42,
            trace_points: 10,
            full_traces: false,
            threads: Some(2),
            output: None,
        }
    }

    #[test]
    fn runs_are_deterministic_and_thread_count_invariant() {
        let config = two_arm_config();
        let a = run_regret_experiment(&config).unwrap();
        let mut serial = config.clone();
        serial.threads = Some(1);
        let b = run_regret_experiment(&serial).unwrap();
        for (pa, pb) in a.records.iter().zip(&b.records) {
            for (ra, rb) in pa.iter().zip(pb) {
                assert_eq!(ra.chosen_arms, rb.chosen_arms);
                assert_eq!(ra.regret_trace, rb.regret_trace);
            }
        }
        for (sa, sb) in a.summaries.iter().zip(&b.summaries) {
            assert_eq!(sa.mean_final_regret, sb.mean_final_regret);
        }

        let mut reseeded = config;
        reseeded.base_seed = 43;
        let c = run_regret_experiment(&reseeded).unwrap();
        assert_ne!(
            a.records[0][0].chosen_arms, c.records[0][0].chosen_arms,
            "a different base seed should change the runs"
        );
    }

    #[test]
    fn a_policy_is_unaffected_by_which_other_policies_run() {
        // Environment tapes are seeded per (replication, arm), never per
        // policy, so dropping the second policy must not perturb the first
        // policy's run (it keeps its seed because it stays at index 0).
        let paired = two_arm_config();
        let mut alone = paired.clone();
        alone.policies = vec![PolicyDescriptor::UcbVv { pilot_fraction: None }];
        let both = run_regret_experiment(&paired).unwrap();
        let solo = run_regret_experiment(&alone).unwrap();
        for (ra, rb) in both.records[0].iter().zip(&solo.records[0]) {
            assert_eq!(ra.chosen_arms, rb.chosen_arms);
            assert_eq!(ra.final_pull_counts, rb.final_pull_counts);
        }
    }

    #[test]
    fn regret_traces_follow_the_chosen_arms_exactly() {
        let outcome = run_regret_experiment(&two_arm_config()).unwrap();
        assert_eq!(outcome.gaps[0], 0.0);
        assert!((outcome.gaps[1] - (1.0 / 12.0 - 0.25 / 12.0)).abs() < 1e-12);
        for policy_records in &outcome.records {
            for record in policy_records {
                let trace = record.regret_trace.as_ref().unwrap();
                assert_eq!(trace.len(), record.chosen_arms.len());
                let mut acc = 0.0;
                for (step, &arm) in record.chosen_arms.iter().enumerate() {
                    acc += outcome.gaps[arm as usize];
                    assert!((trace[step] - acc).abs() < 1e-12);
                }
                assert!(trace.windows(2).all(|w| w[1] >= w[0]));
                let total: u64 = record.final_pull_counts.iter().sum();
                assert_eq!(total, 400);
            }
        }
    }

    #[test]
    fn summaries_aggregate_replications_in_index_order() {
        let outcome = run_regret_experiment(&two_arm_config()).unwrap();
        for (policy_records, summary) in outcome.records.iter().zip(&outcome.summaries) {
            let finals: Vec<f64> = policy_records
                .iter()
                .map(|r| *r.regret_trace.as_ref().unwrap().last().unwrap())
                .collect();
            let mean = finals.iter().sum::<f64>() / finals.len() as f64;
            assert!((summary.mean_final_regret - mean).abs() < 1e-12);
            assert_eq!(summary.trace.last().unwrap().t, 400);
            assert!((summary.trace.last().unwrap().mean - mean).abs() < 1e-12);
            assert_eq!(summary.mean_total_steps, 400.0);
            let pull_sum: f64 = summary.mean_pull_counts.iter().sum();
            assert!((pull_sum - 400.0).abs() < 1e-9);
        }
        assert_eq!(outcome.summaries[0].policy, "ucb_vv");
        assert_eq!(outcome.summaries[1].policy, "epsilon_greedy_0.1");
    }

    #[test]
    fn writes_the_standard_artifact_set() {
        let outcome = run_regret_experiment(&two_arm_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = outcome.write(dir.path()).unwrap();
        let csv = std::fs::read_to_string(&files.tables[0]).unwrap();
        assert!(csv.starts_with("policy,t,mean_regret,stderr\n"));
        assert!(csv.contains("ucb_vv,400,"));
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files.summary).unwrap()).unwrap();
        assert_eq!(summary["kind"], "regret");
        assert_eq!(summary["policies"][0]["policy"], "ucb_vv");
        let resolved: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files.resolved_config).unwrap())
                .unwrap();
        assert_eq!(resolved["kind"], "regret");
        assert_eq!(resolved["replications"], 6);
    }
}
