#![allow(dead_code)]

use dilemma_core::Payoffs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random payoff set satisfying T > R > P > S and 2R > T + S.
pub fn random_payoffs<R: Rng>(rng: &mut R) -> Payoffs {
    let s = rng.random_range(-3.0..3.0);
    let p = s + rng.random_range(0.2..3.0);
    let r = p + rng.random_range(0.2..3.0);
    let t = r + rng.random_range(0.05..0.95) * (r - s);
    Payoffs::new(r, s, t, p).expect("constructed to be valid")
}

/// `n` points evenly spaced strictly inside (lo, hi).
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}

/// Absolute distance from `gamma` to the nearest case or atlas threshold.
pub fn distance_to_thresholds(p: &Payoffs, gamma: f64) -> f64 {
    let (r, s, t, pp) = (p.r, p.s, p.t, p.p);
    [
        (t - r) / (r - s),
        (t - r) / (t - pp),
        (pp - s) / (r - s),
        (pp - s) / (t - pp),
        (t - r) / (r - pp),
        (r - pp) / (t - pp),
        (r - pp) / (r - s),
        (pp - s) / (t - s),
    ]
    .iter()
    .map(|th| (gamma - th).abs())
    .fold(f64::INFINITY, f64::min)
}
