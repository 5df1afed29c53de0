//! Seeded random streams and the fixed block layout used by every sampler.
//!
//! Sample index `n` always lives in block `n / BLOCK_LEN`, and block `b` always
//! draws from ChaCha20 stream `b` under the master seed. Which thread runs a
//! block is irrelevant to the numbers it produces.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in every output that carries random numbers.
pub const RNG_ID: &str = "chacha20-stream-v1";

pub const BLOCK_LEN: usize = 1024;

pub fn block_rng(seed: u64, block: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Stateless sub-seed for independent runs (sweep entries, replications).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x6a09_e667_f3bc_c909)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `(block index, first sample, sample count)` covering `0..n`.
pub fn blocks(n: usize) -> impl Iterator<Item = (u64, usize, usize)> + Clone {
    (0..n.div_ceil(BLOCK_LEN)).map(move |b| {
        let start = b * BLOCK_LEN;
        (b as u64, start, BLOCK_LEN.min(n - start))
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (0 means rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(f)
}
