//! Seeded randomness for starting blocks and test vectors.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector with independent entries uniform on [-1, 1).
pub fn uniform_vector(rng: &mut SeededRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Uniform vector rescaled to unit Euclidean norm.
pub fn unit_vector(rng: &mut SeededRng, len: usize) -> Vec<f64> {
    let mut v = uniform_vector(rng, len);
    crate::linalg::normalize(&mut v);
    v
}
