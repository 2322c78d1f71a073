//! Seeded, partition-independent random streams.
//!
//! Every parallel sampler in this crate splits its work into fixed-size
//! chunks and gives each chunk its own ChaCha stream keyed by
//! `(seed, stream id)`. Chunk boundaries never depend on the number of worker
//! threads, so results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples drawn from one child stream.
pub const CHUNK_LEN: u64 = 1 << 16;

/// Seed used by the CLI when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_080_101;

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` under the master `seed`.
pub fn child_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a task tag and a chunk index into one stream id.
pub fn stream_id(tag: u32, chunk: u32) -> u64 {
    (u64::from(tag) << 32) | u64::from(chunk)
}

/// Splits `n` samples into `(chunk index, chunk length)` pairs.
pub fn chunks(n: u64) -> impl Iterator<Item = (u32, u64)> + Clone {
    let n_chunks = n.div_ceil(CHUNK_LEN);
    (0..n_chunks).map(move |i| {
        let start = i * CHUNK_LEN;
        (i as u32, (n - start).min(CHUNK_LEN))
    })
}
