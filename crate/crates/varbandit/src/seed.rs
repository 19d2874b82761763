//! Deterministic seed derivation.
//!
//! Every random stream in the library is a ChaCha8 generator seeded from a
//! single 64-bit base seed through the splitmix64 mix function. Derivation
//! hashes an ordered list of parts — base seed, replication id, a domain
//! tag, and any sub-identifiers — by folding
//!
//! ```text
//! h := splitmix64(h XOR part)
//! ```
//!
//! over the parts, starting from a fixed initial value. The fold keeps the
//! contract the experiment harness relies on:
//!
//! * the same parts always give the same seed (replayability);
//! * environment streams are derived from `(base, replication, arm)` only,
//!   never from the policy, so every policy in a replication sees the same
//!   reward tape per (arm, pull index) — paired comparisons;
//! * distinct domain tags separate streams that share the same numeric ids
//!   (e.g. policy randomness vs. environment noise of replication 7).

/// Initial fold value (first 64 fractional bits of π; an arbitrary
/// nothing-up-my-sleeve constant).
const FOLD_INIT: u64 = 0x243F_6A88_85A3_08D3;

/// Domain tag for per-arm environment reward streams.
pub const DOMAIN_ENV: u64 = 1;
/// Domain tag for a policy's own randomness (exploration coins, posterior
/// draws).
pub const DOMAIN_POLICY: u64 = 2;
/// Domain tag for randomized experiment setups (e.g. random arm supports).
pub const DOMAIN_SETUP: u64 = 3;
/// Domain tag for market path generation in the trading case study.
pub const DOMAIN_MARKET: u64 = 4;
/// Domain tag for Monte Carlo tail-probability estimation.
pub const DOMAIN_TAIL: u64 = 5;

/// The splitmix64 output function: a bijective 64-bit mix with good
/// avalanche behaviour.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold an ordered list of parts into one 64-bit seed.
pub fn mix_parts(parts: &[u64]) -> u64 {
    parts.iter().fold(FOLD_INIT, |h, &p| splitmix64(h ^ p))
}

/// Seed for a policy's private randomness inside one replication.
pub fn derive_seed(base_seed: u64, replication_id: u64, policy_id: u64) -> u64 {
    mix_parts(&[base_seed, replication_id, DOMAIN_POLICY, policy_id])
}

/// Seed of the reward stream of one arm inside one replication. Independent
/// of the policy by construction.
pub fn env_arm_seed(base_seed: u64, replication_id: u64, arm: u64) -> u64 {
    mix_parts(&[base_seed, replication_id, DOMAIN_ENV, arm])
}

/// Seed for randomized setup construction inside one replication.
pub fn setup_seed(base_seed: u64, replication_id: u64) -> u64 {
    mix_parts(&[base_seed, replication_id, DOMAIN_SETUP])
}

/// Seed of one stock's market path inside one replication.
pub fn market_seed(base_seed: u64, replication_id: u64, stock: u64) -> u64 {
    mix_parts(&[base_seed, replication_id, DOMAIN_MARKET, stock])
}

/// Seed for one replication of a Monte Carlo tail estimate.
pub fn tail_seed(base_seed: u64, replication_id: u64) -> u64 {
    mix_parts(&[base_seed, replication_id, DOMAIN_TAIL])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_matches_the_reference_sequence() {
        // First output of the reference splitmix64 generator seeded with
        // 1234567.
        assert_eq!(splitmix64(1234567), 6457827717110365317);
        assert_eq!(mix_parts(&[42, 7, 3]), 13777102875611401529);
    }

    #[test]
    fn derivation_is_deterministic() {
        assert_eq!(derive_seed(99, 5, 2), derive_seed(99, 5, 2));
        assert_eq!(env_arm_seed(99, 5, 2), env_arm_seed(99, 5, 2));
    }

    #[test]
    fn no_collisions_across_replication_policy_pairs() {
        let mut seen = HashSet::new();
        for rep in 0..1000u64 {
            for policy in 0..100u64 {
                assert!(seen.insert(derive_seed(7, rep, policy)), "collision at ({rep}, {policy})");
            }
        }
        assert_eq!(seen.len(), 100_000);
    }

    #[test]
    fn environment_streams_ignore_the_policy() {
        // The environment sub-seed is a function of (base, replication, arm)
        // alone; deriving policy seeds in between cannot perturb it.
        let before = env_arm_seed(11, 3, 0);
        let _ = derive_seed(11, 3, 0);
        let _ = derive_seed(11, 3, 1);
        assert_eq!(env_arm_seed(11, 3, 0), before);
        // Distinct domains with identical ids give distinct seeds.
        assert_ne!(env_arm_seed(11, 3, 0), derive_seed(11, 3, 0));
        assert_ne!(setup_seed(11, 3), tail_seed(11, 3));
        assert_ne!(market_seed(11, 3, 0), env_arm_seed(11, 3, 0));
    }
}
