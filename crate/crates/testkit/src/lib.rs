//! Generators and brute-force oracles shared by the test suites.
//!
//! The oracles are deliberately naive and follow the definitions
//! literally; they exist to be compared against the optimized
//! implementations.

pub mod hist;
pub mod oracle;
pub mod traceset;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a test seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
