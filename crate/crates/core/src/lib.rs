pub mod baselines;
pub mod cli;
pub mod error;
pub mod eval;
pub mod games;
pub mod learner;
pub mod numerics;
pub mod oracle;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream `stream` for `seed`. Every randomized task
/// (model init, rollouts, batch sampling, per-seed runs) draws from its own
/// stream so results do not depend on scheduling order.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
