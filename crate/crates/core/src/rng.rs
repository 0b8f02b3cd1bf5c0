//! Seeded randomness. Every random draw in a simulation flows through a
//! [`SimRng`]; independent purposes use independent labelled streams so that
//! changing one consumer never perturbs another.

use rand_chacha::ChaCha20Rng;
use rand_core::{CryptoRng, RngCore, SeedableRng};
use sha3::{Digest, Keccak256};

#[derive(Clone, Debug)]
pub struct SimRng {
    inner: ChaCha20Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self::from_label(seed, "root")
    }

    /// A stream derived from `(seed, label)` only.
    pub fn from_label(seed: u64, label: &str) -> Self {
        let mut h = Keccak256::new();
        h.update(b"tids-rng");
        h.update(seed.to_be_bytes());
        h.update(label.as_bytes());
        let out: [u8; 32] = h.finalize().into();
        Self { inner: ChaCha20Rng::from_seed(out) }
    }

    /// Derive a child stream; the parent is not advanced.
    pub fn fork(&self, label: &str) -> Self {
        let mut h = Keccak256::new();
        h.update(b"tids-fork");
        h.update(self.inner.get_seed());
        h.update(self.inner.get_stream().to_be_bytes());
        h.update(label.as_bytes());
        let out: [u8; 32] = h.finalize().into();
        Self { inner: ChaCha20Rng::from_seed(out) }
    }

    pub fn bytes32(&mut self) -> [u8; 32] {
        let mut b = [0u8; 32];
        self.inner.fill_bytes(&mut b);
        b
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Uniform in `[0, bound)`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        // rejection sampling keeps the draw exactly uniform
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

impl CryptoRng for SimRng {}
