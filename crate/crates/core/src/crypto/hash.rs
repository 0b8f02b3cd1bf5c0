use sha3::{Digest, Keccak256};

use super::hex_bytes;

hex_bytes!(
    /// A Keccak-256 output.
    Digest256,
    32
);

pub fn hash256(data: &[u8]) -> Digest256 {
    Digest256(Keccak256::digest(data).into())
}

/// Incremental packed hashing, `hash(a, b, c)` over the concatenation of the
/// parts.
#[derive(Clone, Default)]
pub struct Hasher(Keccak256);

impl Hasher {
    pub fn new() -> Self {
        Self(Keccak256::new())
    }

    pub fn chain(mut self, part: &[u8]) -> Self {
        self.0.update(part);
        self
    }

    pub fn update(&mut self, part: &[u8]) {
        self.0.update(part);
    }

    pub fn finish(self) -> Digest256 {
        Digest256(self.0.finalize().into())
    }
}
