//! Algorithm-class prediction for programming word problems.
//!
//! The crate covers the whole pipeline: parsing a raw problem dump
//! ([`corpus`]), building the multilabel and multiclass datasets
//! ([`datasets`]), feature extraction ([`features`]), the bag-of-words
//! classifiers ([`linear_models`]), the convolutional and feed-forward
//! networks ([`neural`]), CNN ensembles ([`ensemble`]), scoring
//! ([`metrics`]) and the cross-validated experiment grid ([`experiments`]).

pub mod corpus;
pub mod datasets;
pub mod decode;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod features;
pub mod linear_models;
pub mod metrics;
pub mod models;
pub mod neural;
pub mod plots;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used for every seeded operation in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for a numbered sub-stream (fold, ensemble member, ...) of `seed`,
/// mixed with the SplitMix64 finalizer so neighbouring inputs diverge.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
