#![allow(dead_code)]

use epistemia::corpus::random_s5;
use epistemia::{ck_expand, CKStructure, S5Structure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn s5(seed: u64, n: usize, agents: usize, density: f64, connected: bool) -> S5Structure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_s5(&mut rng, n, agents, 1, density, connected)
}

pub fn ck(seed: u64, n: usize, agents: usize, density: f64, connected: bool) -> CKStructure {
    ck_expand(&s5(seed, n, agents, density, connected))
}
