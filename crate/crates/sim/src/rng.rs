//! Per-path random streams.
//!
//! Path `i` under master seed `s` always draws from ChaCha8 keyed by `s` on
//! stream `i`, so outcomes do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

pub fn path_rng(seed: u64, path: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}
