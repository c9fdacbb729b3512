//! Reproducible per-trajectory random streams.
//!
//! `derive(master_seed, i)` keys a ChaCha8 generator with `master_seed` and
//! selects stream `i`. ChaCha streams share a key but use disjoint nonces, so
//! trajectories are independent and each one's path depends only on
//! `(master_seed, i)`, never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn derive(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
