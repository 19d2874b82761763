//! Experiment-scale behavior of the regret policies: orderings between
//! algorithms on shared reward tapes and the growth rate of suboptimal
//! pulls. These run full replicated experiments through the harness, with
//! every instance pinned by an explicit seed.

use varbandit::env::DistributionSpec;
use varbandit::harness::{run_regret_experiment, RegretConfig};
use varbandit::policies::{NigPrior, PolicyDescriptor};

fn regret_config(
    arms: Vec<DistributionSpec>,
    policies: Vec<PolicyDescriptor>,
    horizon: u64,
    replications: u64,
    base_seed: u64,
) -> RegretConfig {
    RegretConfig {
        arms,
        policies,
        horizon,
        replications,
        base_seed,
        trace_points: 10,
        full_traces: false,
        threads: None,
        output: None,
    }
}

/// Two Gaussian arms with a 0.1 variance gap: the Thompson sampler's
/// Normal–Inverse-Gamma model is correctly specified here, and with a
/// weakly informative prior matched to the reward scale (prior variance
/// mean β₀/(α₀−1) = 0.85) it earns the lowest mean regret of the four
/// variance-targeting policies.
#[test]
fn thompson_sampling_has_the_lowest_mean_regret_on_gaussian_arms() {
    let config = regret_config(
        vec![
            DistributionSpec::Gaussian { mean: 0.0, std_dev: 0.85f64.sqrt() },
            DistributionSpec::Gaussian { mean: 0.0, std_dev: 0.75f64.sqrt() },
        ],
        vec![
            PolicyDescriptor::Vts {
                prior: NigPrior { mu0: 0.0, kappa0: 1.0, alpha0: 8.0, beta0: 5.95 },
            },
            PolicyDescriptor::UcbVv { pilot_fraction: None },
            PolicyDescriptor::EpsilonGreedyV { epsilon: 0.1 },
            PolicyDescriptor::EpsilonGreedyV { epsilon: 0.2 },
        ],
        5000,
        400,
        1001,
    );
    let outcome = run_regret_experiment(&config).unwrap();
    let vts = outcome.summaries[0].mean_final_regret;
    for other in &outcome.summaries[1..] {
        assert!(
            vts < other.mean_final_regret,
            "vts regret {vts:.2} should undercut {} at {:.2}",
            other.policy,
            other.mean_final_regret
        );
    }
}

/// Two Uniform arms with a 0.1 variance gap: the variance-UCB policy's
/// mean suboptimal pull count stays under the logarithmic pull budget
/// 8·ln(n)/δ² at every horizon, and its growth from n=1000 to n=5000 is
/// far below proportional (a fixed-exploration-rate policy would scale
/// pulls by the horizon ratio 5).
#[test]
fn variance_ucb_suboptimal_pulls_stay_within_the_logarithmic_budget() {
    let gap: f64 = 0.1;
    let mut suboptimal_pulls = Vec::new();
    for horizon in [1000u64, 2000, 5000] {
        let config = regret_config(
            vec![
                DistributionSpec::Uniform { lower: 0.0, upper: 1.2 },
                DistributionSpec::Uniform { lower: 0.0, upper: 0.24f64.sqrt() },
            ],
            vec![PolicyDescriptor::UcbVv { pilot_fraction: None }],
            horizon,
            200,
            320,
        );
        let outcome = run_regret_experiment(&config).unwrap();
        let pulls = outcome.summaries[0].mean_pull_counts[1];
        let budget = 8.0 * (horizon as f64).ln() / (gap * gap);
        assert!(
            pulls < budget,
            "n={horizon}: mean suboptimal pulls {pulls:.1} exceed the budget {budget:.0}"
        );
        suboptimal_pulls.push(pulls);
    }
    let growth = suboptimal_pulls[2] / suboptimal_pulls[0];
    assert!(
        growth < 3.25,
        "suboptimal pulls grew by {growth:.2} from n=1000 to n=5000; expected sub-linear growth"
    );
}
