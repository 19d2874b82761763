//! Built-in arm families for the identification experiments.
//!
//! All six families share the same optimal arm: a uniform distribution on
//! `[0, 1)` with variance 1/12. Suboptimal arms are uniforms centered at
//! 0.5 whose width is chosen to hit a target variance, so every arm stays
//! inside `[0, 1]`. The families differ in how suboptimal variances are
//! laid out: one shared value, two groups, an arithmetic progression, a
//! geometric progression, or fresh random supports per replication.

use rand_chacha::ChaCha8Rng;

use crate::env::DistributionSpec;

use super::HarnessError;

/// Largest variance a uniform distribution inside `[0, 1]` can have.
const MAX_UNIFORM_VARIANCE: f64 = 1.0 / 12.0;

/// Variance floor applied to the arithmetic progression, which would
/// otherwise go negative for large arm indices.
const PROGRESSION_VARIANCE_FLOOR: f64 = 1e-4;

/// A uniform distribution centered at 0.5 with the given variance.
fn centered_uniform(variance: f64) -> Result<DistributionSpec, HarnessError> {
    if !(variance > 0.0 && variance <= MAX_UNIFORM_VARIANCE) {
        return Err(HarnessError::InvalidConfig(format!(
            "cannot realize variance {variance} with a uniform arm inside [0, 1]"
        )));
    }
    let width = (12.0 * variance).sqrt();
    Ok(DistributionSpec::Uniform { lower: 0.5 - width / 2.0, upper: 0.5 + width / 2.0 })
}

/// The optimal arm shared by every family.
fn optimal_arm() -> DistributionSpec {
    DistributionSpec::Uniform { lower: 0.0, upper: 1.0 }
}

/// Build the arms of setup family `id` (1..=6) with `k` arms. Family 5
/// draws its suboptimal supports from `rng`; the other families ignore it.
/// Family 6 reuses family 1's arms (it differs only in its budget, which
/// scales with the arm count).
pub fn build_bai_setup(
    id: u8,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DistributionSpec>, HarnessError> {
    if k < 2 {
        return Err(HarnessError::InvalidConfig(format!(
            "setup families need at least 2 arms, got {k}"
        )));
    }
    let mut arms = Vec::with_capacity(k);
    arms.push(optimal_arm());
    match id {
        1 | 6 => {
            for _ in 2..=k {
                arms.push(centered_uniform(1.0 / 15.0)?);
            }
        }
        2 => {
            // Two variance groups; the split point is published per arm
            // count rather than derived from a formula.
            let first_group_last_arm = match k {
                16 => 6,
                32 => 14,
                64 => 30,
                other => {
                    return Err(HarnessError::InvalidConfig(format!(
                        "setup 2 is only defined for 16, 32, or 64 arms, got {other}"
                    )))
                }
            };
            for arm in 2..=k {
                let variance = if arm <= first_group_last_arm { 1.0 / 14.0 } else { 1.0 / 17.0 };
                arms.push(centered_uniform(variance)?);
            }
        }
        3 => {
            for arm in 2..=k {
                let variance =
                    (1.0 / 13.0 - 0.0021 * (arm as f64 - 2.0)).max(PROGRESSION_VARIANCE_FLOOR);
                arms.push(centered_uniform(variance)?);
            }
        }
        4 => {
            for arm in 2..=k {
                arms.push(centered_uniform(MAX_UNIFORM_VARIANCE * 0.98f64.powi(arm as i32))?);
            }
        }
        5 => {
            use rand::Rng as _;
            for _ in 2..=k {
                let (lower, upper) = loop {
                    let a: f64 = rng.random::<f64>();
                    let b: f64 = rng.random::<f64>();
                    if a != b {
                        break (a.min(b), a.max(b));
                    }
                };
                arms.push(DistributionSpec::Uniform { lower, upper });
            }
        }
        other => {
            return Err(HarnessError::InvalidConfig(format!(
                "unknown setup family {other}, expected 1..=6"
            )))
        }
    }
    Ok(arms)
}
