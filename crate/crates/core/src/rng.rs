//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The random generator used by every stochastic routine in the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Seed of run `k` derived from a master seed.
pub fn run_seed(master: u64, k: usize) -> u64 {
    master ^ k as u64
}

/// Executes `runs` independent seeded runs on the rayon pool and returns
/// their results ordered by run index.
pub fn run_batch<T, F>(runs: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> T + Sync,
{
    (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded(run_seed(master_seed, k));
            f(k, &mut rng)
        })
        .collect()
}
