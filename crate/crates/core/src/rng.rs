//! Seeded, stream-split random number generation.
//!
//! Every Monte-Carlo routine draws in batches of [`BATCH_SIZE`]; batch `b`
//! uses ChaCha8 stream `b` of the caller's seed and reference samples use
//! stream `REFERENCE_STREAM + b`. Batches run in parallel and are collected in
//! order, so output depends only on the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const BATCH_SIZE: usize = 4096;
pub const REFERENCE_STREAM: u64 = 1 << 32;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` values of `draw`, batch `b` seeded with stream `first_stream + b`.
pub fn batched<F>(n: usize, seed: u64, first_stream: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let batches = n.div_ceil(BATCH_SIZE);
    let out: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, first_stream + b as u64);
            let len = BATCH_SIZE.min(n - b * BATCH_SIZE);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    out.concat()
}
