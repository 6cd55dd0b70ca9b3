//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes a seed and derives one ChaCha stream per
//! batch of trials. Batch boundaries depend only on the trial count, so
//! merged results do not depend on how many worker threads ran the batches.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// Trials per independent stream.
pub const BATCH_SIZE: u64 = 4096;

pub fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs `trials` trials in fixed-size batches on the rayon pool. `run`
/// receives the batch's stream and the global trial indices it covers.
/// Results come back in batch order.
pub fn par_batches<T, F>(seed: u64, trials: u64, run: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, Range<u64>) -> T + Sync,
{
    let batches = trials.div_ceil(BATCH_SIZE);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH_SIZE;
            let end = (start + BATCH_SIZE).min(trials);
            let mut rng = stream(seed, b);
            run(&mut rng, start..end)
        })
        .collect()
}
