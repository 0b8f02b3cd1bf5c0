use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand_core::CryptoRngCore;

use super::{hash256, hex_bytes, CryptoError, Digest256};

hex_bytes!(
    /// 20-byte account or contract identifier.
    Address,
    20
);
hex_bytes!(
    /// secp256k1 secret scalar, big-endian.
    PrivateKey,
    32
);
hex_bytes!(
    /// SEC1-compressed secp256k1 point.
    PublicKey,
    33
);
hex_bytes!(
    /// Recoverable signature `r || s || v`.
    Signature,
    65
);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub privkey: PrivateKey,
    pub pubkey: PublicKey,
    pub address: Address,
}

impl KeyPair {
    pub fn from_privkey(privkey: PrivateKey) -> Result<Self, CryptoError> {
        let pubkey = pubkey_of(&privkey)?;
        Ok(Self { address: pubkey.address(), privkey, pubkey })
    }
}

impl PublicKey {
    /// Low 20 bytes of the Keccak-256 of the uncompressed point (without the
    /// SEC1 tag byte).
    pub fn address(&self) -> Address {
        let vk = self.verifying_key().expect("PublicKey always holds a valid point");
        address_of_verifying_key(&vk)
    }

    pub(crate) fn verifying_key(&self) -> Result<VerifyingKey, CryptoError> {
        VerifyingKey::from_sec1_bytes(&self.0).map_err(|_| CryptoError::InvalidKey)
    }

    pub(crate) fn from_verifying_key(vk: &VerifyingKey) -> Self {
        let ep = vk.to_encoded_point(true);
        let mut out = [0u8; 33];
        out.copy_from_slice(ep.as_bytes());
        PublicKey(out)
    }

    /// Parses and validates a compressed point.
    pub fn parse(bytes: &[u8]) -> Result<Self, CryptoError> {
        let vk = VerifyingKey::from_sec1_bytes(bytes).map_err(|_| CryptoError::InvalidKey)?;
        Ok(Self::from_verifying_key(&vk))
    }
}

impl PrivateKey {
    pub(crate) fn signing_key(&self) -> Result<SigningKey, CryptoError> {
        SigningKey::from_bytes(&self.0.into()).map_err(|_| CryptoError::InvalidKey)
    }
}

fn address_of_verifying_key(vk: &VerifyingKey) -> Address {
    let ep = vk.to_encoded_point(false);
    let d = hash256(&ep.as_bytes()[1..]);
    let mut out = [0u8; 20];
    out.copy_from_slice(&d.0[12..]);
    Address(out)
}

pub fn keypair_gen(rng: &mut impl CryptoRngCore) -> KeyPair {
    let sk = SigningKey::random(rng);
    let pubkey = PublicKey::from_verifying_key(sk.verifying_key());
    KeyPair { privkey: PrivateKey(sk.to_bytes().into()), address: address_of_verifying_key(sk.verifying_key()), pubkey }
}

/// Public key for a secret scalar; fails for zero or out-of-range scalars.
pub fn pubkey_of(privkey: &PrivateKey) -> Result<PublicKey, CryptoError> {
    let sk = privkey.signing_key()?;
    Ok(PublicKey::from_verifying_key(sk.verifying_key()))
}

pub fn sign(privkey: &PrivateKey, digest: &Digest256) -> Result<Signature, CryptoError> {
    let sk = privkey.signing_key()?;
    let (sig, recid) = sk.sign_prehash_recoverable(&digest.0).map_err(|_| CryptoError::InvalidKey)?;
    let mut out = [0u8; 65];
    out[..64].copy_from_slice(&sig.to_bytes());
    out[64] = recid.to_byte();
    Ok(Signature(out))
}

pub fn recover_signer(digest: &Digest256, sig: &Signature) -> Result<Address, CryptoError> {
    let parsed = EcdsaSignature::from_slice(&sig.0[..64]).map_err(|_| CryptoError::VerificationFailed)?;
    let recid = RecoveryId::from_byte(sig.0[64]).ok_or(CryptoError::VerificationFailed)?;
    let vk =
        VerifyingKey::recover_from_prehash(&digest.0, &parsed, recid).map_err(|_| CryptoError::VerificationFailed)?;
    Ok(address_of_verifying_key(&vk))
}
