//! Authenticated public-key encryption: ephemeral secp256k1 ECDH, a Keccak
//! key derivation bound to both points, then ChaCha20-Poly1305.

use alloc::vec::Vec;
use k256::elliptic_curve::sec1::ToEncodedPoint;
use k256::{ecdh::diffie_hellman, NonZeroScalar, ProjectivePoint};
use rand_core::CryptoRngCore;

use super::symmetric::{aead_open, aead_seal, AEAD_OVERHEAD};
use super::{CryptoError, Hasher, PrivateKey, PublicKey};

/// Bytes added by [`seal`] on top of the plaintext length.
pub const SEAL_OVERHEAD: usize = 33 + AEAD_OVERHEAD;

fn derive_key(shared: &[u8], eph: &[u8; 33], recipient: &[u8; 33]) -> [u8; 32] {
    Hasher::new().chain(b"tids-ecies-v1").chain(shared).chain(eph).chain(recipient).finish().0
}

pub fn seal(to: &PublicKey, plaintext: &[u8], rng: &mut impl CryptoRngCore) -> Vec<u8> {
    let recipient = to.verifying_key().expect("PublicKey holds a valid point");
    let eph = NonZeroScalar::random(&mut *rng);
    let eph_pub = (ProjectivePoint::GENERATOR * *eph).to_affine().to_encoded_point(true);
    let mut eph_bytes = [0u8; 33];
    eph_bytes.copy_from_slice(eph_pub.as_bytes());
    let shared = diffie_hellman(eph, recipient.as_affine());
    let key = derive_key(shared.raw_secret_bytes(), &eph_bytes, &to.0);
    let mut nonce = [0u8; 12];
    rng.fill_bytes(&mut nonce);
    let mut out = Vec::with_capacity(SEAL_OVERHEAD + plaintext.len());
    out.extend_from_slice(&eph_bytes);
    out.extend_from_slice(&aead_seal(&key, &nonce, plaintext));
    out
}

pub fn open(with: &PrivateKey, data: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if data.len() < SEAL_OVERHEAD {
        return Err(CryptoError::Authentication);
    }
    let secret = NonZeroScalar::try_from(&with.0[..]).map_err(|_| CryptoError::InvalidKey)?;
    let own_pub =
        PublicKey::from_verifying_key(&k256::ecdsa::VerifyingKey::from(k256::PublicKey::from_secret_scalar(&secret)));
    let (eph_bytes, body) = data.split_at(33);
    let eph = k256::PublicKey::from_sec1_bytes(eph_bytes).map_err(|_| CryptoError::Authentication)?;
    let shared = diffie_hellman(secret, eph.as_affine());
    let mut eph_arr = [0u8; 33];
    eph_arr.copy_from_slice(eph_bytes);
    let key = derive_key(shared.raw_secret_bytes(), &eph_arr, &own_pub.0);
    aead_open(&key, body)
}
