//! UCB-VV: upper confidence bounds on the empirical variance.
//!
//! The policy plays a short round-robin pilot phase and afterwards pulls the
//! arm maximizing
//!
//! ```text
//! B_i(t) = Vbar_i + sqrt(2 ln(t) / s_i)
//! ```
//!
//! where `Vbar_i` is the *biased* variance estimate of arm `i` over its
//! `s_i` pulls. The decision at step `t` scores arms with the state as of
//! step `t - 1`, i.e. the logarithm term uses `t - 1`. Arms that have never
//! been pulled score `+inf`, so the policy is safe even with a pilot shorter
//! than one pass.

use rand_chacha::ChaCha8Rng;

use super::{argmax_lowest, Policy, PolicyContext};
use crate::stats::RunningStats;

/// The UCB-VV arm index `Vbar + sqrt(2 ln(t) / count)`; `+inf` for an arm
/// that was never pulled. `t` is clamped below at 1 so the bonus is always
/// well defined.
pub fn ucb_vv_index(stats: &RunningStats, t: u64) -> f64 {
    if stats.count() == 0 {
        return f64::INFINITY;
    }
    let log_t = (t.max(1) as f64).ln();
    let variance = stats.biased_variance().expect("count >= 1");
    variance + (2.0 * log_t / stats.count() as f64).sqrt()
}

/// UCB on the biased variance with a configurable pilot phase.
#[derive(Debug, Clone)]
pub struct UcbVv {
    pilot_fraction: Option<f64>,
}

impl UcbVv {
    /// `pilot_fraction` is the fraction `S_P` of the horizon spent in the
    /// round-robin pilot; `None` means one full pass over the arms.
    pub fn new(pilot_fraction: Option<f64>) -> Self {
        Self { pilot_fraction }
    }

    fn pilot_steps(&self, num_arms: usize, horizon: u64) -> u64 {
        match self.pilot_fraction {
            None => (num_arms as u64).min(horizon),
            Some(f) => ((f * horizon as f64).floor() as u64).min(horizon),
        }
    }
}

impl Policy for UcbVv {
    fn select(&mut self, ctx: &PolicyContext, _rng: &mut ChaCha8Rng) -> usize {
        let k = ctx.num_arms();
        if ctx.t <= self.pilot_steps(k, ctx.horizon) {
            return ((ctx.t - 1) % k as u64) as usize;
        }
        argmax_lowest(ctx.arms.iter().map(|s| ucb_vv_index(s, ctx.t - 1)))
    }
}
