//! Seeded random streams.
//!
//! Each consumer draws from its own ChaCha8 stream derived from the scenario
//! seed, so adding draws in one place never shifts another's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum RngStream {
    Faults = 1,
    GaugeNoise = 2,
    Deploy = 3,
    PostRejuvenationFaults = 4,
}

pub fn stream_rng(seed: u64, stream: RngStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
