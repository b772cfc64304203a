//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! SHA-256 digest of a base seed and a list of labels, so streams are
//! independent of thread scheduling and of the order work is executed in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derives a child seed from `base` and an ordered list of labels.
pub fn derive(base: u64, labels: &[&dyn Label]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for label in labels {
        label.feed(&mut hasher);
        hasher.update([0xff]);
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(base: u64, labels: &[&dyn Label]) -> Rng {
    rng(derive(base, labels))
}

pub trait Label {
    fn feed(&self, hasher: &mut Sha256);
}

impl Label for str {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update(b"s");
        hasher.update(self.as_bytes());
    }
}

impl Label for &str {
    fn feed(&self, hasher: &mut Sha256) {
        (**self).feed(hasher)
    }
}

impl Label for String {
    fn feed(&self, hasher: &mut Sha256) {
        self.as_str().feed(hasher)
    }
}

impl Label for usize {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update(b"u");
        hasher.update((*self as u64).to_le_bytes());
    }
}

impl Label for u64 {
    fn feed(&self, hasher: &mut Sha256) {
        hasher.update(b"u");
        hasher.update(self.to_le_bytes());
    }
}
