use alloc::vec::Vec;
use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use rand_core::CryptoRngCore;

use super::{hex_bytes, CryptoError};

hex_bytes!(
    /// A 256-bit symmetric secret (the delivery `key`, or the `receipt`).
    SecretKey256,
    32
);

impl SecretKey256 {
    pub fn random(rng: &mut impl CryptoRngCore) -> Self {
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut b);
        Self(b)
    }
}

const NONCE_LEN: usize = 12;

/// ChaCha20-Poly1305 with a random nonce prepended to the ciphertext.
pub fn sym_encrypt(key: &SecretKey256, plaintext: &[u8], rng: &mut impl CryptoRngCore) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    aead_seal(&key.0, &nonce, plaintext)
}

pub fn sym_decrypt(key: &SecretKey256, ct: &[u8]) -> Result<Vec<u8>, CryptoError> {
    aead_open(&key.0, ct)
}

pub(crate) fn aead_seal(key: &[u8; 32], nonce: &[u8; NONCE_LEN], plaintext: &[u8]) -> Vec<u8> {
    let cipher = ChaCha20Poly1305::new(key.into());
    let body = cipher
        .encrypt(Nonce::from_slice(nonce), plaintext)
        .expect("chacha20poly1305 encryption is infallible for in-memory buffers");
    let mut out = Vec::with_capacity(NONCE_LEN + body.len());
    out.extend_from_slice(nonce);
    out.extend_from_slice(&body);
    out
}

pub(crate) fn aead_open(key: &[u8; 32], ct: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if ct.len() < NONCE_LEN + 16 {
        return Err(CryptoError::Authentication);
    }
    let (nonce, body) = ct.split_at(NONCE_LEN);
    ChaCha20Poly1305::new(key.into()).decrypt(Nonce::from_slice(nonce), body).map_err(|_| CryptoError::Authentication)
}

pub(crate) const AEAD_OVERHEAD: usize = NONCE_LEN + 16;
