//! Seeded generator family with independent streams per purpose.
//!
//! Every run derives its generators from one `u64` seed. Each consumer gets
//! its own ChaCha stream, so e.g. adding an evaluation episode never shifts
//! the exploration noise.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as RunRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Env = 2,
    Explore = 3,
    HillClimb = 4,
    Sampling = 5,
    Eval = 6,
    Model = 7,
    Data = 8,
}

pub fn stream(seed: u64, which: Stream) -> RunRng {
    let mut rng = RunRng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
