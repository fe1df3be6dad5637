//! Automated radiomics: feature extraction, workflow search, ensemble
//! evaluation and harmonization for binary classification of tumor images.

pub mod error;
pub mod evaluate;
pub mod features;
pub mod harmonize;
pub mod linalg;
pub mod model;
pub mod phantom;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod search;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Image = model::ImageVolume<f64>;
pub type Image32 = model::ImageVolume<f32>;

/// Hex SHA-256 of a byte string.
pub fn digest_bytes(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
