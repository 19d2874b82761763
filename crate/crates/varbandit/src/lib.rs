//! Variance-targeting multi-armed bandits.
//!
//! Most bandit libraries optimize the *mean* reward of the chosen arm. This
//! crate targets the *variance* (and, for one policy family, the Sharpe
//! ratio) of the reward stream instead, which is the quantity of interest in
//! risk-seeking applications such as option buying, where the payoff of a
//! call grows with the volatility of the underlying.
//!
//! The crate is organized in five layers:
//!
//! * [`stats`] — numerically stable streaming moment accumulation
//!   ([`stats::RunningStats`]), the estimator shared by every policy.
//! * [`env`] — reward environments: parametric arm distributions with known
//!   moments, geometric Brownian motion price paths, and a rolling-window
//!   market state for the trading case study.
//! * [`policies`] — sequential decision rules behind one [`policies::Policy`]
//!   trait: UCB-VV (upper confidence bounds on variance), SHVV (sequential
//!   halving on variance for fixed-budget best-arm identification),
//!   UCB-Sharpe, and baselines (ε-greedy on variance, variance Thompson
//!   sampling, KL-UCB for Bernoulli arms, uniform allocation, UCB1).
//! * [`bounds`] — closed-form concentration / regret / error-probability
//!   bounds with explicit vacuousness flags, plus Monte Carlo tail-probability
//!   estimators used to validate them.
//! * [`harness`] — seeded, replicated experiment runners (regret curves,
//!   identification error rates, bound-validation sweeps, and a GBM call
//!   option trading case study) with deterministic, parallelism-independent
//!   output.
//!
//! Reproducibility is a design goal throughout: every random draw is derived
//! from a single base seed via documented seed mixing, experiment output is
//! byte-identical across reruns and across thread counts, and paired
//! replications expose identical reward tapes to every policy.

pub mod bounds;
pub mod env;
pub mod harness;
pub mod policies;
pub mod seed;
pub mod stats;
