//! Seeded random streams.
//!
//! Every stochastic step of a run draws from one `ChaCha8Rng` seeded from the
//! run's seed, so a config + seed pair always replays the same run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type RunRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw from `N(mean, stdev²)`, always consuming exactly one standard normal sample.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, stdev: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + stdev * z
}

/// Bernoulli trial that consumes one uniform draw even when `p` is 0 or 1.
pub fn chance<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}
