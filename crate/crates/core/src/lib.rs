//! Complex-valued matching network over a semantic Hilbert space.
//!
//! Words are complex superposition states built from amplitude and phase
//! tables, word windows become density matrices through a softmax-weighted
//! mixture, and trainable rank-one projectors turn each window into a
//! vector of measurement probabilities. Questions and answers are matched by
//! the cosine of their max-pooled probability vectors.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, dataset
//! loading and the command line live in the companion `cnm` crate.
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autograd;
pub mod data;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod matcher;
pub mod measurement;
pub mod metrics_lab;
pub mod mixture;
pub mod model;
pub mod text;
pub mod trainer;

pub use error::{Error, Result};

/// Deterministic generator used for every random draw in the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
