//! Independent random streams derived from one master seed.
//!
//! Each component gets its own ChaCha stream, so adding workers or draws in
//! one component never shifts the numbers another component sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INIT: u64 = 1;
pub const SHUFFLE: u64 = 2;
pub const EVAL: u64 = 3;
const WORKER_RESET: u64 = 1 << 32;
const WORKER_ACT: u64 = 2 << 32;

pub fn stream(master: u64, component: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(component);
    rng
}

pub fn worker_reset(master: u64, worker: usize) -> ChaCha8Rng {
    stream(master, WORKER_RESET + worker as u64)
}

pub fn worker_act(master: u64, worker: usize) -> ChaCha8Rng {
    stream(master, WORKER_ACT + worker as u64)
}
