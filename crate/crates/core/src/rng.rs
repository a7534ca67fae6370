//! Seeded, platform-independent random streams.
//!
//! Every consumer gets its own ChaCha8 stream so that, for example, the MC
//! drive for a seed is the same no matter which topology is being measured.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Drive = 1,
    Quantum = 2,
    SimCheck = 3,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
