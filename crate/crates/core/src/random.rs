use rand::Rng;

use crate::rational::Rational;

/// Exact Bernoulli draw with rational success probability `p` in `[0, 1]`.
pub fn bernoulli(rng: &mut impl Rng, p: &Rational) -> bool {
    (rng.gen_range(0..p.denom() as u128) as i128) < p.numer()
}

/// Seed of trial `t` in a batch started from `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_add(t as u64)
}
